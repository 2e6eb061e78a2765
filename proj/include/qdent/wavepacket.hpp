#pragma once

#include <qdent/twoqubit.hpp>

namespace qdent::wavepacket {

struct WavepacketParams {
    double T1_ps = 60.0;
    double pulse_width_ps = 5.0;
    double I0 = 1.0;

    double K() const { return T1_ps / pulse_width_ps; }
    void validate() const;
};

/// exp(x^2) erfc(x), accurate for large positive x.
double erfcx(double x);

/// Exponentially modified Gaussian in units of the pulse width:
/// f(s, K) = (1/2K) exp(1/(2K^2) - s/K) erfc((1/K - s)/sqrt 2).
double emg_profile(double s, double K);

/// Emission-time density in 1/ps for time t in ps after the pulse peak.
double intensity_profile(double t_ps, const WavepacketParams& params);

enum class OverlapConvention {
    squared_amplitude, ///< O = [int sqrt f(t) sqrt f(t - tau) dt]^2
    amplitude,         ///< O = int sqrt f(t) sqrt f(t - tau) dt
};

/// Normalised temporal overlap O(tau) of two identical wavepackets.
double temporal_overlap(double tau_ps, const WavepacketParams& params,
                        OverlapConvention convention = OverlapConvention::squared_amplitude);

/// I0 * O(tau).
double indistinguishability_vs_offset(double tau_ps, const WavepacketParams& params,
                                      OverlapConvention convention = OverlapConvention::squared_amplitude);

/// F = (1 + I) / 2.
double fidelity_from_indistinguishability(double I);

/// Inverts F = (1 + I0) / 2 for a measured zero-delay fidelity.
double calibrate_i0(double fidelity_at_zero);

/// Relative weights of the post-selected state components.
struct StateWeights {
    double quantum = 0.0;  ///< P(rho_Q) = XQ^2 / 2
    double same_pol = 0.0; ///< P(rho_B,0) = X2 X0
    double half = 0.0;     ///< P(rho_B,1/2) = XQ XB + XB^2 / 2

    double total() const { return quantum + same_pol + half; }
};

StateWeights state_weights(double g2, double eta);

/// Weighted fidelity of the post-selected state with the singlet.
double fidelity_vs_g2(double I, double g2, double eta);

/// Normalised mixture P(rho_Q) rho_Q(I) + P(rho_B,0) rho_B,0 + P(rho_B,1/2) rho_B,1/2.
twoqubit::TwoQubitDensity weighted_source_state(double I, double g2, double eta);

} // namespace qdent::wavepacket
