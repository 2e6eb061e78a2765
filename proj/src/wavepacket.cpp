#include <qdent/wavepacket.hpp>

#include <qdent/errors.hpp>
#include <qdent/photostat.hpp>
#include <qdent/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qdent::wavepacket {

void WavepacketParams::validate() const
{
    if (!(T1_ps > 0)) throw ParameterError("T1 must be positive");
    if (!(pulse_width_ps > 0)) throw ParameterError("pulse width must be positive");
    if (!(I0 >= 0 && I0 <= 1)) throw ParameterError("I0 must lie in [0, 1]");
}

double erfcx(double x)
{
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    const double inv2 = 1.0 / (x * x);
    return (1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2) / (x * std::sqrt(kPi));
}

double emg_profile(double s, double K)
{
    // The exponent 1/(2K^2) - s/K - x^2 collapses to -s^2/2 with x the erfc
    // argument, so the product never overflows.
    const double x = (1.0 / K - s) / std::sqrt(2.0);
    if (x < 0) return (0.5 / K) * std::exp(0.5 / (K * K) - s / K) * std::erfc(x);
    return (0.5 / K) * std::exp(-0.5 * s * s) * erfcx(x);
}

double intensity_profile(double t_ps, const WavepacketParams& params)
{
    params.validate();
    return emg_profile(t_ps / params.pulse_width_ps, params.K()) / params.pulse_width_ps;
}

double temporal_overlap(double tau_ps, const WavepacketParams& params, OverlapConvention convention)
{
    params.validate();
    // Support of a single wavepacket, then intersected with its shifted copy.
    const double lo0 = -10.0 * params.pulse_width_ps;
    const double hi0 = params.T1_ps * std::log(1e9);
    const double lo = std::max(lo0, lo0 + tau_ps);
    const double hi = std::min(hi0, hi0 + tau_ps);
    double amp = 0.0;
    if (lo < hi) {
        auto integrand = [&](double t) {
            return std::sqrt(intensity_profile(t, params) * intensity_profile(t - tau_ps, params));
        };
        // Break at both peaks so the adaptive rule resolves them.
        std::vector<double> cuts{lo, hi};
        for (double c : {0.0, tau_ps, 0.5 * tau_ps})
            if (c > lo && c < hi) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        quadrature::Options opt;
        opt.rel_tol = 1e-10;
        opt.abs_tol = 1e-15;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            amp += quadrature::integrate(integrand, cuts[k], cuts[k + 1], opt).value;
    }
    amp = std::clamp(amp, 0.0, 1.0);
    return convention == OverlapConvention::squared_amplitude ? amp * amp : amp;
}

double indistinguishability_vs_offset(double tau_ps, const WavepacketParams& params,
                                      OverlapConvention convention)
{
    return params.I0 * temporal_overlap(tau_ps, params, convention);
}

double fidelity_from_indistinguishability(double I)
{
    if (!(I >= 0 && I <= 1)) throw ParameterError("indistinguishability must lie in [0, 1]");
    return 0.5 * (1.0 + I);
}

double calibrate_i0(double fidelity_at_zero)
{
    if (!(fidelity_at_zero >= 0.5 && fidelity_at_zero <= 1.0))
        throw ParameterError("zero-delay fidelity must lie in [0.5, 1]");
    return 2.0 * fidelity_at_zero - 1.0;
}

StateWeights state_weights(double g2, double eta)
{
    if (!(eta > 0 && eta <= 1)) throw ParameterError("efficiency must lie in (0, 1]");
    const auto x = photostat::detection_outcomes(photostat::qd_distribution_from_g2(g2), eta);
    return {0.5 * x.XQ * x.XQ, x.X2 * x.X0, x.XQ * x.XB + 0.5 * x.XB * x.XB};
}

double fidelity_vs_g2(double I, double g2, double eta)
{
    const double fq = fidelity_from_indistinguishability(I);
    const StateWeights w = state_weights(g2, eta);
    return (w.quantum * fq + 0.5 * w.half) / w.total();
}

twoqubit::TwoQubitDensity weighted_source_state(double I, double g2, double eta)
{
    const StateWeights w = state_weights(g2, eta);
    const Matrix4c<double> m = (w.quantum * twoqubit::rho_Q(I).matrix()
                                + w.same_pol * twoqubit::rho_B_zero().matrix()
                                + w.half * twoqubit::rho_B_half().matrix())
                               / w.total();
    return twoqubit::TwoQubitDensity(m);
}

} // namespace qdent::wavepacket
