#pragma once

#include <qdent/fock.hpp>
#include <qdent/photostat.hpp>
#include <qdent/twoqubit.hpp>

#include <optional>
#include <vector>

namespace qdent::swap {

enum class SourceKind { qd_postselected, spdc, spdc_multiplexed };

struct SwapScenario {
    SourceKind source_kind = SourceKind::qd_postselected;
    int mux_N = 1;
    double rep_rate_hz = 76.3e6;
    double eta_s = 0.71;
    double eta_det = 0.9;
    bool pnr = true;
    double switch_eta = 0.97;
    double insertion_eta = 1.0;
    double channel_loss_db = 0.0;
    std::optional<double> fidelity_floor;
    double qd_g2 = 0.015;
    double qd_I = 1.0;
    /// Entangler optics between source and recombination beamsplitter, per pair.
    double setup_eta = 1.0;
    double spdc_p1 = 0.01;
    photostat::PairStatistics spdc_statistics = photostat::PairStatistics::thermal;
    int spdc_max_pairs = 2;

    void validate() const;
    bool is_spdc() const { return source_kind != SourceKind::qd_postselected; }
    /// Photon survival from source to the outer-node detector.
    double outer_efficiency() const;
    /// Photon survival from source through the channel to the BSM detector.
    double inner_efficiency() const;
    /// Entanglement attempts per second: R/2 for the two-pulse QD scheme, R for SPDC.
    double attempt_rate_hz() const;
};

/// Scenario defaults used for the rate comparison: QD (eta_s 0.71, I = 1,
/// g2 0.015) and SPDC (eta_s 0.8, PNR, fidelity floor 0.97).
SwapScenario fig5_qd();
SwapScenario fig5_spdc(bool pnr = true);
SwapScenario fig5_multiplexed(int N);

/// QD: (R/4) eta_s^2 setup_eta. SPDC: R P1 eta_s^2.
/// Multiplexed: R (1 - (1 - P1)^N) (eta_s switch insertion)^2.
double pair_rate(const SwapScenario& s);

/// (R/2) eta_s^2, the lossless ceiling of the two-pulse QD scheme.
double max_pair_rate_bound(const SwapScenario& s);

/// Source output over modes (outer H, outer V, inner H, inner V).
fock::FockMixture source_mixture(const SwapScenario& s);

/// Photon-number distribution feeding an SPDC-type source (multiplexing included).
photostat::PhotonNumberDistribution spdc_output_distribution(const SwapScenario& s);

struct DetectorModel {
    double outer_eta_left = 1.0;
    double outer_eta_right = 1.0;
    double inner_eta = 1.0;
    bool pnr = true;
};

struct HeraldClass {
    double success_probability = 0.0; ///< herald and one outer click per node (Z basis)
    double fidelity = 0.0;            ///< singlet fraction of the reconstructed outer state
    std::optional<twoqubit::TwoQubitDensity> state;
};

struct SwapResult {
    double rate_hz = 0.0;
    double fidelity = 0.0;
    double success_probability = 0.0; ///< per attempt
    double herald_probability = 0.0;  ///< BSM herald with a photon present at both outer nodes
    double attempt_rate_hz = 0.0;
    HeraldClass psi_minus;
    HeraldClass psi_plus;
};

/// Exact enumeration for arbitrary source mixtures; rate fields left at zero.
SwapResult swap_states(const fock::FockMixture& left, const fock::FockMixture& right, const DetectorModel& det);

SwapResult swap_once(const SwapScenario& left, const SwapScenario& right);

/// Largest P1 with swap fidelity >= fidelity_floor for two copies of `s`.
double optimise_pump(const SwapScenario& s);

struct SweepRow {
    double loss_db = 0.0;
    double rate_qd = 0.0;
    double fidelity_qd = 0.0;
    double rate_spdc = 0.0;
    double p1_spdc = 0.0;
    double fidelity_spdc = 0.0;
    std::vector<double> rate_mux;
    std::vector<double> p1_mux;
};

struct SweepConfig {
    SwapScenario qd = fig5_qd();
    SwapScenario spdc = fig5_spdc();
    std::vector<int> mux_N = {10, 100};
    std::vector<double> loss_grid_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
};

std::vector<SweepRow> sweep_loss(const SweepConfig& cfg);

} // namespace qdent::swap
