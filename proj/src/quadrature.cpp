#include <qdent/quadrature.hpp>

#include <qdent/errors.hpp>

#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace qdent::quadrature {
namespace {

// Kronrod abscissae; odd indices are the embedded Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(centre - dx);
        const double f2 = f(centre + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, const Options& options)
{
    if (a == b) return {};
    if (!(a < b)) {
        Result r = integrate(f, b, a, options);
        r.value = -r.value;
        return r;
    }

    std::priority_queue<Segment> heap;
    Segment first = gauss_kronrod(f, a, b);
    heap.push(first);
    double total = first.value;
    double error = first.error;
    int intervals = 1;

    while (error > std::max(options.abs_tol, options.rel_tol * std::abs(total))) {
        if (intervals >= options.max_intervals) {
            std::ostringstream msg;
            msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: value "
                << total << ", error estimate " << error << " after " << intervals << " intervals";
            throw NumericalError(msg.str());
        }
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Segment left = gauss_kronrod(f, worst.a, mid);
        Segment right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }

    // Re-sum to shed accumulated rounding from the running updates.
    double value = 0.0, err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {value, err, intervals};
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels)
{
    if (panels < 2) panels = 2;
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double sum = f(a) + f(b);
    for (int k = 1; k < panels; ++k) sum += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

} // namespace qdent::quadrature
