#pragma once

#include <qdent/twoqubit.hpp>
#include <qdent/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qdent::tomography {

enum class NamedState { H, V, D, A, R, L };

/// D = (H + V)/sqrt2, A = (H - V)/sqrt2, R = (H - iV)/sqrt2, L = (H + iV)/sqrt2.
Vector2c<double> named_ket(NamedState s);
std::string to_string(NamedState s);
NamedState named_state_from_string(const std::string& s);

struct WaveplateAngles {
    double hwp_deg = 0.0;
    double qwp_deg = 0.0;
};

Matrix2c<double> hwp_jones(double angle_deg);
Matrix2c<double> qwp_jones(double angle_deg);

/// State transmitted with certainty by HWP -> QWP -> PBS(H):
/// U_HWP^dag U_QWP^dag |H>.
Vector2c<double> waveplate_ket(const WaveplateAngles& angles);

/// Waveplate angles that project onto the named state.
WaveplateAngles canonical_angles(NamedState s);

/// One arm of a tomography setting.
struct ArmSetting {
    std::optional<NamedState> name; ///< empty for arbitrary angles
    WaveplateAngles angles;

    static ArmSetting named(NamedState s) { return {s, canonical_angles(s)}; }
    static ArmSetting from_angles(WaveplateAngles a) { return {std::nullopt, a}; }

    Vector2c<double> ket() const { return waveplate_ket(angles); }
    std::string label() const { return name ? to_string(*name) : "custom"; }
};

struct MeasurementSetting {
    ArmSetting arm1;
    ArmSetting arm2;

    /// Pi_1 (x) Pi_2 in the (HH, HV, VH, VV) basis.
    Matrix4c<double> projector() const;
};

/// The 36 products of the six eigenstates {H, V, D, A, R, L} per arm.
std::vector<MeasurementSetting> standard_settings();

struct CountRecord {
    MeasurementSetting setting;
    std::uint64_t counts = 0;
    double integration_s = 1.0;
};

/// Expected count total_pairs * Tr[rho Pi] per setting, Poisson sampled.
std::vector<CountRecord> simulate_counts(const twoqubit::TwoQubitDensity& rho,
                                         const std::vector<MeasurementSetting>& settings,
                                         std::uint64_t total_pairs, std::uint64_t seed);

/// Same as simulate_counts with the expectation rounded instead of sampled.
std::vector<CountRecord> expected_counts(const twoqubit::TwoQubitDensity& rho,
                                         const std::vector<MeasurementSetting>& settings,
                                         std::uint64_t total_pairs);

struct MleOptions {
    int random_starts = 4;
    std::uint64_t seed = 0x5eed;
    double f_rel_tol = 1e-10;
    int max_iterations = 5000;
};

struct Reconstruction {
    twoqubit::TwoQubitDensity state;
    double log_likelihood = 0.0;
    int converged_starts = 0;
};

/// Poisson log-likelihood of the records for state rho, with the overall
/// pair rate set to its maximising value.
double log_likelihood(const std::vector<CountRecord>& records, const twoqubit::TwoQubitDensity& rho);

/// Maximum-likelihood density matrix over rho = T^dag T / Tr(T^dag T),
/// T lower triangular with real diagonal.
Reconstruction mle_reconstruct(const std::vector<CountRecord>& records, const MleOptions& options = {});

/// Standard deviation of the singlet fraction over Poisson resamples of the counts.
double bootstrap_uncertainty(const std::vector<CountRecord>& records, int resamples, std::uint64_t seed);

void write_records_csv(std::ostream& os, const std::vector<CountRecord>& records);
std::vector<CountRecord> read_records_csv(std::istream& is);

} // namespace qdent::tomography
