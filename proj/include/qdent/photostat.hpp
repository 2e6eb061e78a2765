#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qdent::photostat {

/// Per-pulse photon-number probabilities P_0..P_N.
class PhotonNumberDistribution {
public:
    PhotonNumberDistribution() : probs_{1.0} {}

    /// Validates non-negativity and unit sum (1e-12) of `probs`.
    explicit PhotonNumberDistribution(std::vector<double> probs);

    const std::vector<double>& probs() const { return probs_; }
    double operator[](std::size_t n) const { return n < probs_.size() ? probs_[n] : 0.0; }

    double mu() const { return mu_; }
    /// sum n(n-1) P_n / mu^2, or 0 for the vacuum.
    double g2() const { return g2_; }
    /// Highest photon number with nonzero probability.
    int max_photons() const;

    /// Value passed to qd_distribution_from_g2, kept for the self-consistency report.
    std::optional<double> requested_g2;

private:
    std::vector<double> probs_;
    double mu_ = 0.0;
    double g2_ = 0.0;
};

/// Small-g2 quantum-dot mapping with mu = 1: (g2/2, 1 - g2, g2/2).
PhotonNumberDistribution qd_distribution_from_g2(double g2);

enum class PairStatistics { thermal, poissonian };

/// Pair-number distribution whose single-pair probability equals `pair_prob`
/// before truncation at `max_pairs` and renormalisation.
PhotonNumberDistribution spdc_pair_distribution(double pair_prob, PairStatistics statistics,
                                                int max_pairs);

/// Largest single-pair probability reachable by the given statistics:
/// 1/4 for thermal, 1/e for Poissonian.
double max_single_pair_probability(PairStatistics statistics);

struct DetectionOutcomes {
    double X2 = 0.0; ///< both photons detected
    double XQ = 0.0; ///< exactly the primary photon survives (or one of two)
    double XB = 0.0; ///< one of two photons detected, the other lost
    double X0 = 1.0; ///< nothing detected

    double sum() const { return X2 + XQ + XB + X0; }
};

/// Outcome probabilities for a distribution truncated at two photons under
/// per-photon efficiency `eta`.
DetectionOutcomes detection_outcomes(const PhotonNumberDistribution& dist, double eta);

struct Efficiency {
    std::string role;
    std::string label;
    double value = 1.0;
    double sigma = 0.0;
};

/// Ordered list of named efficiencies. Several entries may share a role;
/// the role's efficiency is then their product.
class EfficiencyChain {
public:
    EfficiencyChain() = default;
    explicit EfficiencyChain(std::vector<Efficiency> entries);

    void add(Efficiency e);
    const std::vector<Efficiency>& entries() const { return entries_; }

    bool contains(const std::string& role) const;
    /// Product of every entry with this role; ConfigError when absent.
    double role_value(const std::string& role) const;
    double product() const;
    /// Returns a copy with every entry of `role` replaced by a single entry.
    EfficiencyChain with_role(const std::string& role, double value, double sigma = 0.0) const;

    /// Source-to-beamsplitter rows of the measured loss budget.
    static EfficiencyChain table_s1();
    /// Post-beamsplitter rows (tomography optics, fibres, detectors) for both arms.
    static EfficiencyChain table_s1_post_bs();

private:
    std::vector<Efficiency> entries_;
};

inline const std::vector<std::string> kForwardRoles = {"sps", "switch", "long", "short", "bs"};

struct RateEstimate {
    double rate = 0.0;
    double uncertainty = 0.0;
};

/// (R/4) sps^2 switch^2 long short bs^2 with first-order error propagation.
RateEstimate forward_rate(const EfficiencyChain& chain, double rep_rate_hz);

/// Divides a measured coincidence rate by the product of every entry in
/// `post_bs_chain`.
RateEstimate back_propagate_rate(double measured_rate, const EfficiencyChain& post_bs_chain,
                                 double measured_sigma = 0.0);

} // namespace qdent::photostat
