#include <qdent/photostat.hpp>

#include <qdent/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qdent::photostat {
namespace {

template <class F>
double bisect(F&& f, double lo, double hi)
{
    // f increasing on [lo, hi] with f(lo) < 0 < f(hi)
    for (int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_probability(double x, const char* what)
{
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream msg;
        msg << what << " must lie in [0, 1], got " << x;
        throw ParameterError(msg.str());
    }
}

} // namespace

PhotonNumberDistribution::PhotonNumberDistribution(std::vector<double> probs) : probs_(std::move(probs))
{
    if (probs_.empty()) throw ContractError("photon-number distribution is empty");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw ContractError("photon-number probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "photon-number probabilities sum to " << total;
        throw ContractError(msg.str());
    }
    double m2 = 0.0;
    for (std::size_t n = 0; n < probs_.size(); ++n) {
        mu_ += n * probs_[n];
        m2 += n * (n - 1.0) * probs_[n];
    }
    g2_ = mu_ > 0 ? m2 / (mu_ * mu_) : 0.0;
}

int PhotonNumberDistribution::max_photons() const
{
    for (std::size_t n = probs_.size(); n-- > 0;)
        if (probs_[n] > 0) return static_cast<int>(n);
    return 0;
}

PhotonNumberDistribution qd_distribution_from_g2(double g2)
{
    if (!(g2 >= 0.0)) throw ParameterError("g2 must be non-negative");
    if (g2 >= 0.5) throw ModelDomainError("small-g2 mapping requires g2 < 0.5");
    PhotonNumberDistribution d({g2 / 2, 1.0 - g2, g2 / 2});
    d.requested_g2 = g2;
    return d;
}

double max_single_pair_probability(PairStatistics statistics)
{
    return statistics == PairStatistics::thermal ? 0.25 : std::exp(-1.0);
}

PhotonNumberDistribution spdc_pair_distribution(double pair_prob, PairStatistics statistics, int max_pairs)
{
    if (max_pairs < 2) throw ContractError("max_pairs must be at least 2");
    if (!(pair_prob >= 0.0 && pair_prob < 0.5)) throw ParameterError("pair probability must lie in [0, 0.5)");
    const double ceiling = max_single_pair_probability(statistics);
    if (pair_prob > ceiling) {
        std::ostringstream msg;
        msg << "single-pair probability " << pair_prob << " is unreachable with "
            << (statistics == PairStatistics::thermal ? "thermal" : "Poissonian")
            << " statistics (maximum " << ceiling << ")";
        throw ParameterError(msg.str());
    }

    std::vector<double> p(static_cast<std::size_t>(max_pairs) + 1);
    if (statistics == PairStatistics::thermal) {
        const double lambda = bisect([&](double l) { return (1 - l) * l - pair_prob; }, 0.0, 0.5);
        for (int n = 0; n <= max_pairs; ++n) p[n] = (1 - lambda) * std::pow(lambda, n);
    } else {
        const double nu = bisect([&](double v) { return v * std::exp(-v) - pair_prob; }, 0.0, 1.0);
        double term = std::exp(-nu);
        for (int n = 0; n <= max_pairs; ++n) {
            p[n] = term;
            term *= nu / (n + 1);
        }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= total;
    // absorb the last ulp so the sum check is exact
    p[0] = std::max(0.0, 1.0 - std::accumulate(p.begin() + 1, p.end(), 0.0));
    return PhotonNumberDistribution(std::move(p));
}

DetectionOutcomes detection_outcomes(const PhotonNumberDistribution& dist, double eta)
{
    check_probability(eta, "detection efficiency");
    if (dist.max_photons() > 2)
        throw ModelDomainError("detection outcomes are defined for at most two photons per pulse");
    const double p0 = dist[0], p1 = dist[1], p2 = dist[2];
    DetectionOutcomes x;
    x.X2 = p2 * eta * eta;
    x.XQ = p1 * eta + p2 * eta * (1 - eta);
    x.XB = p2 * eta * (1 - eta);
    x.X0 = p0 + p1 * (1 - eta) + p2 * (1 - eta) * (1 - eta);
    return x;
}

EfficiencyChain::EfficiencyChain(std::vector<Efficiency> entries)
{
    for (auto& e : entries) add(std::move(e));
}

void EfficiencyChain::add(Efficiency e)
{
    check_probability(e.value, ("efficiency '" + e.label + "'").c_str());
    if (!(e.sigma >= 0.0)) throw ParameterError("efficiency uncertainty must be non-negative");
    entries_.push_back(std::move(e));
}

bool EfficiencyChain::contains(const std::string& role) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const Efficiency& e) { return e.role == role; });
}

double EfficiencyChain::role_value(const std::string& role) const
{
    if (!contains(role)) throw ConfigError("efficiency chain has no entry for role '" + role + "'");
    double v = 1.0;
    for (const auto& e : entries_)
        if (e.role == role) v *= e.value;
    return v;
}

double EfficiencyChain::product() const
{
    double v = 1.0;
    for (const auto& e : entries_) v *= e.value;
    return v;
}

EfficiencyChain EfficiencyChain::with_role(const std::string& role, double value, double sigma) const
{
    EfficiencyChain out;
    bool placed = false;
    for (const auto& e : entries_) {
        if (e.role != role) {
            out.add(e);
        } else if (!placed) {
            out.add({role, role, value, sigma});
            placed = true;
        }
    }
    if (!placed) out.add({role, role, value, sigma});
    return out;
}

EfficiencyChain EfficiencyChain::table_s1()
{
    return EfficiencyChain({
        {"sps", "single photon source", 0.49, 0.03},
        {"switch", "fiber mating sleeve + polarisation paddles", 0.83, 0.02},
        {"switch", "lens pair", 0.97, 0.002},
        {"switch", "EOM", 0.997, 0.002},
        {"switch", "PBS", 0.988, 0.002},
        {"long", "delayed interferometer arm", 0.913, 0.005},
        {"short", "non-delayed interferometer arm", 0.987, 0.005},
        {"bs", "recombination beam-splitter", 0.90, 0.01},
    });
}

EfficiencyChain EfficiencyChain::table_s1_post_bs()
{
    return EfficiencyChain({
        {"tomography", "tomography HWP + QWP + PBS (arm 1)", 0.90, 0.01},
        {"tomography", "tomography HWP + QWP + PBS (arm 2)", 0.90, 0.01},
        {"fiber", "fiber coupling + transmission to detector 1", 0.50, 0.02},
        {"fiber", "fiber coupling + transmission to detector 2", 0.536, 0.02},
        {"detector", "detector 1", 0.90, 0.03},
        {"detector", "detector 2", 0.78, 0.03},
    });
}

RateEstimate forward_rate(const EfficiencyChain& chain, double rep_rate_hz)
{
    if (!(rep_rate_hz > 0)) throw ParameterError("repetition rate must be positive");
    auto exponent = [](const std::string& role) {
        return role == "sps" || role == "switch" || role == "bs" ? 2.0 : 1.0;
    };
    double rate = rep_rate_hz / 4.0;
    for (const auto& role : kForwardRoles) rate *= std::pow(chain.role_value(role), exponent(role));

    double rel_var = 0.0;
    for (const auto& e : chain.entries()) {
        if (std::find(kForwardRoles.begin(), kForwardRoles.end(), e.role) == kForwardRoles.end()) continue;
        if (e.value == 0.0) continue;
        const double r = exponent(e.role) * e.sigma / e.value;
        rel_var += r * r;
    }
    return {rate, rate * std::sqrt(rel_var)};
}

RateEstimate back_propagate_rate(double measured_rate, const EfficiencyChain& post_bs_chain,
                                 double measured_sigma)
{
    if (!(measured_rate >= 0)) throw ParameterError("measured rate must be non-negative");
    double rel_var = measured_rate > 0 ? std::pow(measured_sigma / measured_rate, 2) : 0.0;
    for (const auto& e : post_bs_chain.entries()) {
        if (e.value == 0.0)
            throw ParameterError("cannot back-propagate through zero efficiency '" + e.label + "'");
        rel_var += std::pow(e.sigma / e.value, 2);
    }
    const double rate = measured_rate / post_bs_chain.product();
    return {rate, rate * std::sqrt(rel_var)};
}

} // namespace qdent::photostat
