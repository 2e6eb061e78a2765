#pragma once

#include <functional>

namespace qdent::quadrature {

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 1e-14;
    int max_intervals = 2000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod rule on [a, b].
/// Throws NumericalError (with the achieved error in the message) when the
/// tolerance is not met within `max_intervals` subdivisions.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options = {});

/// Composite Simpson rule with `panels` (rounded up to even) equal panels.
double simpson(const std::function<double(double)>& f, double a, double b, int panels);

} // namespace qdent::quadrature
