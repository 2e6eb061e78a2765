#pragma once

#include <qdent/errors.hpp>
#include <qdent/twoqubit.hpp>
#include <qdent/types.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

namespace qdent::fock {

/// Amplitudes below this magnitude are dropped from the sparse map.
inline constexpr double kPruneThreshold = 1e-15;

/// Two sources with at most two photons each.
inline constexpr int kDefaultMaxPhotons = 4;

enum class InputPort { a = 0, b = 1 };
enum class OutputPort { c = 0, d = 1 };
enum class Polarisation { H = 0, V = 1 };

/// Flat index of a (port, polarisation) mode: (aH, aV, bH, bV) -> 0..3 before
/// the beamsplitter, (cH, cV, dH, dV) -> 0..3 after it.
constexpr std::size_t mode_index(InputPort p, Polarisation pol)
{
    return 2 * static_cast<std::size_t>(p) + static_cast<std::size_t>(pol);
}
constexpr std::size_t mode_index(OutputPort p, Polarisation pol)
{
    return 2 * static_cast<std::size_t>(p) + static_cast<std::size_t>(pol);
}

namespace detail {

inline double sqrt_factorial(int n)
{
    static const std::array<double, 33> table = [] {
        std::array<double, 33> t{};
        double f = 1.0;
        t[0] = 1.0;
        for (int k = 1; k < 33; ++k) {
            f *= k;
            t[k] = std::sqrt(f);
        }
        return t;
    }();
    return table.at(static_cast<std::size_t>(n));
}

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace detail

/// Sparse superposition over occupation vectors of `Modes` bosonic modes,
/// truncated at a maximum total photon number.
template <std::size_t Modes>
class BasicFockState {
public:
    using Occupation = std::array<std::uint8_t, Modes>;
    using TermMap = std::map<Occupation, cdouble>;

    explicit BasicFockState(int max_photons = kDefaultMaxPhotons) : max_photons_(max_photons)
    {
        if (max_photons < 0) throw ParameterError("photon-number truncation must be non-negative");
    }

    static BasicFockState vacuum(int max_photons = kDefaultMaxPhotons)
    {
        BasicFockState s(max_photons);
        s.add(Occupation{}, 1.0);
        return s;
    }

    static BasicFockState basis(const Occupation& occ, int max_photons = kDefaultMaxPhotons)
    {
        BasicFockState s(max_photons);
        s.add(occ, 1.0);
        return s;
    }

    static int total(const Occupation& occ)
    {
        return std::accumulate(occ.begin(), occ.end(), 0);
    }

    /// Accumulates `amp` onto the term `occ`.
    void add(const Occupation& occ, cdouble amp)
    {
        if (total(occ) > max_photons_) {
            std::ostringstream msg;
            msg << "occupation with " << total(occ) << " photons exceeds truncation " << max_photons_;
            throw ModelDomainError(msg.str());
        }
        terms_[occ] += amp;
    }

    cdouble amplitude(const Occupation& occ) const
    {
        auto it = terms_.find(occ);
        return it == terms_.end() ? cdouble{} : it->second;
    }

    const TermMap& terms() const { return terms_; }
    int max_photons() const { return max_photons_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    double norm_squared() const
    {
        double n = 0.0;
        for (const auto& [occ, amp] : terms_) n += std::norm(amp);
        return n;
    }

    BasicFockState& prune(double threshold = kPruneThreshold)
    {
        std::erase_if(terms_, [threshold](const auto& kv) { return std::abs(kv.second) < threshold; });
        return *this;
    }

    BasicFockState& normalize()
    {
        const double n = std::sqrt(norm_squared());
        if (!(n > 0)) throw ContractError("cannot normalise an empty Fock state");
        for (auto& [occ, amp] : terms_) amp /= n;
        return prune();
    }

    BasicFockState& scale(cdouble factor)
    {
        for (auto& [occ, amp] : terms_) amp *= factor;
        return prune();
    }

    /// Modes carrying at least one photon in some stored term.
    std::array<bool, Modes> occupied_modes() const
    {
        std::array<bool, Modes> used{};
        for (const auto& [occ, amp] : terms_)
            for (std::size_t m = 0; m < Modes; ++m) used[m] = used[m] || occ[m] > 0;
        return used;
    }

    bool operator==(const BasicFockState&) const = default;

private:
    int max_photons_;
    TermMap terms_;
};

using FockState = BasicFockState<4>;
using Occupation = FockState::Occupation;

/// Superposition sum_n c_n |n> in a single mode, all others empty.
template <std::size_t Modes>
BasicFockState<Modes> single_mode_state(std::size_t mode, std::span<const cdouble> amplitudes,
                                        int max_photons = kDefaultMaxPhotons)
{
    if (mode >= Modes) throw ContractError("mode index out of range");
    BasicFockState<Modes> s(max_photons);
    for (std::size_t n = 0; n < amplitudes.size(); ++n) {
        if (amplitudes[n] == cdouble{}) continue;
        typename BasicFockState<Modes>::Occupation occ{};
        occ[mode] = static_cast<std::uint8_t>(n);
        s.add(occ, amplitudes[n]);
    }
    return s.prune();
}

/// Product state of two kets living on disjoint modes of the same register.
template <std::size_t Modes>
BasicFockState<Modes> tensor(const BasicFockState<Modes>& left, const BasicFockState<Modes>& right)
{
    const auto lu = left.occupied_modes();
    const auto ru = right.occupied_modes();
    for (std::size_t m = 0; m < Modes; ++m)
        if (lu[m] && ru[m]) {
            std::ostringstream msg;
            msg << "tensor: both factors occupy mode " << m;
            throw ContractError(msg.str());
        }
    BasicFockState<Modes> out(left.max_photons() + right.max_photons());
    for (const auto& [lo, la] : left.terms())
        for (const auto& [ro, ra] : right.terms()) {
            typename BasicFockState<Modes>::Occupation occ;
            for (std::size_t m = 0; m < Modes; ++m) occ[m] = static_cast<std::uint8_t>(lo[m] + ro[m]);
            out.add(occ, la * ra);
        }
    return out.prune();
}

/// Concatenates two registers: modes of `left` come first.
template <std::size_t A, std::size_t B>
BasicFockState<A + B> kron(const BasicFockState<A>& left, const BasicFockState<B>& right)
{
    BasicFockState<A + B> out(left.max_photons() + right.max_photons());
    for (const auto& [lo, la] : left.terms())
        for (const auto& [ro, ra] : right.terms()) {
            typename BasicFockState<A + B>::Occupation occ;
            std::copy(lo.begin(), lo.end(), occ.begin());
            std::copy(ro.begin(), ro.end(), occ.begin() + A);
            out.add(occ, la * ra);
        }
    return out.prune();
}

/// Linear-optical map on modes (i, j): the creation operators transform as
/// a_i^dag -> u(0,0) a_i^dag + u(1,0) a_j^dag and
/// a_j^dag -> u(0,1) a_i^dag + u(1,1) a_j^dag. Each basis term is expanded
/// binomially; photon number is conserved so truncation is exact.
template <std::size_t Modes>
BasicFockState<Modes> apply_two_mode(const BasicFockState<Modes>& state, std::size_t i, std::size_t j,
                                     const Matrix2c<double>& u)
{
    if (i >= Modes || j >= Modes || i == j) throw ContractError("invalid mode pair");
    BasicFockState<Modes> out(state.max_photons());
    for (const auto& [occ, amp] : state.terms()) {
        const int ni = occ[i], nj = occ[j];
        const double norm = 1.0 / (detail::sqrt_factorial(ni) * detail::sqrt_factorial(nj));
        // (u00 x + u10 y)^ni (u01 x + u11 y)^nj, x = a_i^dag, y = a_j^dag
        for (int k = 0; k <= ni; ++k) {
            const cdouble ck = detail::binomial(ni, k) * std::pow(u(0, 0), k) * std::pow(u(1, 0), ni - k);
            if (ck == cdouble{}) continue;
            for (int l = 0; l <= nj; ++l) {
                const cdouble cl = detail::binomial(nj, l) * std::pow(u(0, 1), l) * std::pow(u(1, 1), nj - l);
                if (cl == cdouble{}) continue;
                const int p = k + l, q = ni + nj - k - l;
                auto target = occ;
                target[i] = static_cast<std::uint8_t>(p);
                target[j] = static_cast<std::uint8_t>(q);
                out.add(target, amp * ck * cl * norm * detail::sqrt_factorial(p) * detail::sqrt_factorial(q));
            }
        }
    }
    return out.prune();
}

/// Multiplies every term by exp(i * phase * n_mode).
template <std::size_t Modes>
BasicFockState<Modes> apply_phase(const BasicFockState<Modes>& state, std::size_t mode, double phase)
{
    BasicFockState<Modes> out(state.max_photons());
    for (const auto& [occ, amp] : state.terms()) out.add(occ, amp * std::polar(1.0, phase * occ[mode]));
    return out;
}

/// Photon-number probability distribution over occupation vectors.
template <std::size_t Modes>
std::map<typename BasicFockState<Modes>::Occupation, double> number_distribution(const BasicFockState<Modes>& s)
{
    std::map<typename BasicFockState<Modes>::Occupation, double> p;
    for (const auto& [occ, amp] : s.terms()) p[occ] += std::norm(amp);
    return p;
}

/// Per-polarisation power transmissivities of the recombination beamsplitter.
struct BeamsplitterSpec {
    double transmissivity_H = 0.5;
    double transmissivity_V = 0.5;

    double reflectivity_H() const { return 1.0 - transmissivity_H; }
    double reflectivity_V() const { return 1.0 - transmissivity_V; }

    static BeamsplitterSpec balanced() { return {}; }
};

/// 2x2 mode matrix [[t, i r], [i r, t]] mapping inputs (a, b) to outputs (c, d).
Matrix2c<double> beamsplitter_matrix(double transmissivity);

/// Mixes input ports (a, b) into output ports (c, d) independently for each
/// polarisation: a^dag -> t c^dag + i r d^dag, b^dag -> i r c^dag + t d^dag.
FockState apply_beamsplitter(const FockState& state, const BeamsplitterSpec& spec);

/// Outcome of projecting onto one photon in each output port.
struct PostSelection {
    std::optional<twoqubit::TwoQubitDensity> state; ///< empty when probability is zero
    double probability = 0.0;

    bool empty() const { return !state.has_value(); }
};

/// Projects onto exactly one photon in port c and one in port d and returns
/// the normalised polarisation state (qubit 1 = c, qubit 2 = d).
PostSelection post_select_coincidence(const FockState& state);

struct WeightedState {
    double weight;
    FockState state;
};
using FockMixture = std::vector<WeightedState>;

/// Mixture version: conditional states are combined with their joint weights.
PostSelection post_select_coincidence(const FockMixture& mixture);

/// Emission ket sqrt(P0)|0> + sqrt(P1)|1> + sqrt(P2)|2> + ... in one mode.
FockState emission_state(std::span<const double> probabilities, std::size_t mode,
                         int max_photons = kDefaultMaxPhotons);

} // namespace qdent::fock
