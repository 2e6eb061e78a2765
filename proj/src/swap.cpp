#include <qdent/swap.hpp>

#include <qdent/errors.hpp>

#include <array>
#include <cmath>
#include <map>
#include <sstream>

namespace qdent::swap {

void SwapScenario::validate() const
{
    auto prob = [](double x, const char* what) {
        if (!(x >= 0 && x <= 1)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
    };
    prob(eta_s, "eta_s");
    prob(eta_det, "eta_det");
    prob(switch_eta, "switch_eta");
    prob(insertion_eta, "insertion_eta");
    prob(qd_I, "qd_I");
    prob(setup_eta, "setup_eta");
    if (fidelity_floor) prob(*fidelity_floor, "fidelity_floor");
    if (!(qd_g2 >= 0 && qd_g2 < 1)) throw ParameterError("qd_g2 must lie in [0, 1)");
    if (!(rep_rate_hz > 0)) throw ParameterError("repetition rate must be positive");
    if (!(channel_loss_db >= 0)) throw ParameterError("channel loss must be non-negative");
    if (source_kind == SourceKind::spdc_multiplexed && mux_N < 1)
        throw ParameterError("multiplexing needs N >= 1");
    if (spdc_max_pairs < 2) throw ParameterError("SPDC truncation needs at least two pairs");
}

double SwapScenario::outer_efficiency() const
{
    double e = eta_s * eta_det;
    if (source_kind == SourceKind::qd_postselected) e *= std::sqrt(setup_eta);
    if (source_kind == SourceKind::spdc_multiplexed) e *= switch_eta * insertion_eta;
    return e;
}

double SwapScenario::inner_efficiency() const
{
    return outer_efficiency() * std::pow(10.0, -channel_loss_db / 10.0);
}

double SwapScenario::attempt_rate_hz() const
{
    return source_kind == SourceKind::qd_postselected ? rep_rate_hz / 2 : rep_rate_hz;
}

SwapScenario fig5_qd()
{
    SwapScenario s;
    s.source_kind = SourceKind::qd_postselected;
    s.eta_s = 0.71;
    s.qd_I = 1.0;
    s.qd_g2 = 0.015;
    return s;
}

SwapScenario fig5_spdc(bool pnr)
{
    SwapScenario s;
    s.source_kind = SourceKind::spdc;
    s.eta_s = 0.8;
    s.pnr = pnr;
    s.fidelity_floor = 0.97;
    return s;
}

SwapScenario fig5_multiplexed(int N)
{
    SwapScenario s = fig5_spdc(true);
    s.source_kind = SourceKind::spdc_multiplexed;
    s.mux_N = N;
    return s;
}

double pair_rate(const SwapScenario& s)
{
    s.validate();
    const double R = s.rep_rate_hz;
    switch (s.source_kind) {
    case SourceKind::qd_postselected: return R / 4 * s.eta_s * s.eta_s * s.setup_eta;
    case SourceKind::spdc: {
        const double p1 = s.fidelity_floor ? optimise_pump(s) : s.spdc_p1;
        return R * p1 * s.eta_s * s.eta_s;
    }
    case SourceKind::spdc_multiplexed: {
        const double p1 = s.fidelity_floor ? optimise_pump(s) : s.spdc_p1;
        const double e = s.eta_s * s.switch_eta * s.insertion_eta;
        return R * (1 - std::pow(1 - p1, s.mux_N)) * e * e;
    }
    }
    return 0.0;
}

double max_pair_rate_bound(const SwapScenario& s)
{
    return s.rep_rate_hz / 2 * s.eta_s * s.eta_s;
}

photostat::PhotonNumberDistribution spdc_output_distribution(const SwapScenario& s)
{
    const auto single = photostat::spdc_pair_distribution(s.spdc_p1, s.spdc_statistics, s.spdc_max_pairs);
    if (s.source_kind != SourceKind::spdc_multiplexed || s.mux_N == 1) return single;
    // The switch forwards one source that fired; its pair number is
    // distributed as a single source conditioned on n >= 1.
    const double p0 = single[0];
    const double fired = 1 - std::pow(p0, s.mux_N);
    std::vector<double> p(single.probs().size());
    p[0] = std::pow(p0, s.mux_N);
    for (std::size_t n = 1; n < p.size(); ++n) p[n] = single[n] * fired / (1 - p0);
    double tail = 0.0;
    for (std::size_t n = 1; n < p.size(); ++n) tail += p[n];
    p[0] = std::max(0.0, 1.0 - tail);
    return photostat::PhotonNumberDistribution(std::move(p));
}

namespace {

using fock::FockState;
using fock::Occupation;

constexpr std::size_t kOutH = 0, kOutV = 1, kInH = 2, kInV = 3;

// (a_H b_V - a_V b_H)^n |0>, normalised; a = outer, b = inner.
FockState pair_state(int n, int max_photons)
{
    FockState s(max_photons);
    const double amp = 1.0 / std::sqrt(n + 1.0);
    for (int k = 0; k <= n; ++k) {
        Occupation occ{};
        occ[kOutH] = static_cast<std::uint8_t>(k);
        occ[kInV] = static_cast<std::uint8_t>(k);
        occ[kOutV] = static_cast<std::uint8_t>(n - k);
        occ[kInH] = static_cast<std::uint8_t>(n - k);
        s.add(occ, ((n - k) % 2 ? -amp : amp));
    }
    return s;
}

// Rows <e+| and <e-| for Z, X, Y analysis (first state H, D, R).
Matrix2c<double> analysis_matrix(int basis)
{
    const double r = 1.0 / std::sqrt(2.0);
    const cdouble i(0, 1);
    Matrix2c<double> u;
    switch (basis) {
    case 0: u << 1, 0, 0, 1; break;
    case 1: u << r, r, r, -r; break;
    default: u << r, i * r, r, -i * r; break;
    }
    return u;
}

// Sign of the Pauli eigenvalue carried by the first state of each basis.
constexpr std::array<double, 3> kPlusSign = {1.0, 1.0, -1.0};

double p_click(int m, double eta, bool pnr)
{
    if (m == 0) return 0.0;
    return pnr ? m * eta * std::pow(1 - eta, m - 1) : 1 - std::pow(1 - eta, m);
}

double p_dark(int m, double eta)
{
    return std::pow(1 - eta, m);
}

struct Heralded {
    double weight;
    fock::BasicFockState<4> outer; // (L+, L-, R+, R-) before rotation: (LH, LV, RH, RV)
};

twoqubit::TwoQubitDensity pauli_matrix_state(const std::array<std::array<double, 4>, 4>& t)
{
    std::array<Matrix2c<double>, 4> s;
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, cdouble(0, -1), cdouble(0, 1), 0;
    s[3] << 1, 0, 0, -1;
    Matrix4c<double> rho = Matrix4c<double>::Zero();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            Matrix4c<double> k;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = s[a](i, j) * s[b];
            rho += 0.25 * t[a][b] * k;
        }
    return twoqubit::TwoQubitDensity::nearest_physical(rho);
}

HeraldClass evaluate_class(const std::vector<Heralded>& list, const DetectorModel& det)
{
    HeraldClass out;
    if (list.empty()) return out;
    // p[bl][br][a][b]: node outcomes a, b in {+, -} for bases bl, br in {Z, X, Y}.
    double p[3][3][2][2] = {};
    for (int bl = 0; bl < 3; ++bl)
        for (int br = 0; br < 3; ++br) {
            for (const auto& h : list) {
                auto s = fock::apply_two_mode(h.outer, 0, 1, analysis_matrix(bl));
                s = fock::apply_two_mode(s, 2, 3, analysis_matrix(br));
                for (const auto& [occ, prob] : fock::number_distribution(s)) {
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) {
                            const double left = p_click(occ[a], det.outer_eta_left, det.pnr)
                                                * p_dark(occ[1 - a], det.outer_eta_left);
                            const double right = p_click(occ[2 + b], det.outer_eta_right, det.pnr)
                                                 * p_dark(occ[3 - b], det.outer_eta_right);
                            p[bl][br][a][b] += h.weight * prob * left * right;
                        }
                }
            }
        }

    double zz = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) zz += p[0][0][a][b];
    out.success_probability = zz;
    if (!(zz > 0)) return out;

    // Linear inversion from conditional outcome frequencies. Pauli order
    // (1, X, Y, Z) against basis index (Z, X, Y) -> pauli 3, 1, 2.
    constexpr int pauli_of[3] = {3, 1, 2};
    std::array<std::array<double, 4>, 4> t{};
    t[0][0] = 1.0;
    std::array<double, 4> left_sum{}, right_sum{};
    for (int bl = 0; bl < 3; ++bl)
        for (int br = 0; br < 3; ++br) {
            double q[2][2];
            double tot = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) tot += p[bl][br][a][b];
            if (!(tot > 0)) throw NumericalError("swap tomography basis has no events");
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) q[a][b] = p[bl][br][a][b] / tot;
            const double sl = kPlusSign[bl], sr = kPlusSign[br];
            t[pauli_of[bl]][pauli_of[br]] = sl * sr * (q[0][0] - q[0][1] - q[1][0] + q[1][1]);
            left_sum[pauli_of[bl]] += sl * (q[0][0] + q[0][1] - q[1][0] - q[1][1]) / 3.0;
            right_sum[pauli_of[br]] += sr * (q[0][0] - q[0][1] + q[1][0] - q[1][1]) / 3.0;
        }
    for (int k = 1; k < 4; ++k) {
        t[k][0] = left_sum[k];
        t[0][k] = right_sum[k];
    }
    out.state = pauli_matrix_state(t);
    out.fidelity = twoqubit::singlet_fraction(*out.state).value;
    return out;
}

} // namespace

fock::FockMixture source_mixture(const SwapScenario& s)
{
    s.validate();
    fock::FockMixture mix;
    if (s.source_kind == SourceKind::qd_postselected) {
        const auto dist = photostat::qd_distribution_from_g2(s.qd_g2);
        using fock::InputPort;
        using fock::Polarisation;
        const FockState a = fock::emission_state(dist.probs(), fock::mode_index(InputPort::a, Polarisation::H));
        const FockState b = fock::emission_state(dist.probs(), fock::mode_index(InputPort::b, Polarisation::V));
        // Output port c is the outer photon, d the inner one.
        const FockState out = fock::apply_beamsplitter(fock::tensor(a, b), fock::BeamsplitterSpec::balanced());
        const double I = s.qd_I;
        if (I > 0) mix.push_back({0.5 * (1 + I), out});
        // Distinguishable fraction: the post-selected singlet dephases to Psi+.
        if (I < 1) mix.push_back({0.5 * (1 - I), fock::apply_phase(out, kOutV, kPi)});
        return mix;
    }
    const auto dist = spdc_output_distribution(s);
    for (int n = 1; n <= dist.max_photons(); ++n)
        if (dist[n] > 0) mix.push_back({dist[n], pair_state(n, 2 * s.spdc_max_pairs)});
    // Vacuum carries weight but never heralds; keep it for normalisation.
    if (dist[0] > 0) mix.push_back({dist[0], FockState::vacuum(2 * s.spdc_max_pairs)});
    return mix;
}

SwapResult swap_states(const fock::FockMixture& left, const fock::FockMixture& right, const DetectorModel& det)
{
    // Joint modes: L(oH, oV, iH, iV), R(oH, oV, iH, iV).
    constexpr std::size_t LoH = 0, LoV = 1, LiH = 2, LiV = 3, RoH = 4, RoV = 5, RiH = 6, RiV = 7;
    const Matrix2c<double> bs = fock::beamsplitter_matrix(0.5);

    std::vector<Heralded> minus, plus;
    double herald = 0.0;
    for (const auto& [wl, sl] : left)
        for (const auto& [wr, sr] : right) {
            const double w = wl * wr / (sl.norm_squared() * sr.norm_squared());
            if (!(w > 0)) continue;
            // Keep only terms that can herald and reach both nodes; these
            // photon numbers are conserved by everything downstream.
            fock::BasicFockState<8> joint(sl.max_photons() + sr.max_photons());
            for (const auto& [ol, al] : sl.terms()) {
                if (ol[kOutH] + ol[kOutV] == 0) continue;
                for (const auto& [orr, ar] : sr.terms()) {
                    if (orr[kOutH] + orr[kOutV] == 0) continue;
                    if (ol[kInH] + ol[kInV] + orr[kInH] + orr[kInV] < 2) continue;
                    fock::BasicFockState<8>::Occupation occ;
                    std::copy(ol.begin(), ol.end(), occ.begin());
                    std::copy(orr.begin(), orr.end(), occ.begin() + 4);
                    joint.add(occ, al * ar);
                }
            }
            if (joint.empty()) continue;
            // BSM beamsplitter: left inner -> port c, right inner -> port d.
            joint = fock::apply_two_mode(joint, LiH, RiH, bs);
            joint = fock::apply_two_mode(joint, LiV, RiV, bs);

            std::map<std::array<std::uint8_t, 4>, fock::BasicFockState<4>> groups;
            for (const auto& [occ, amp] : joint.terms()) {
                const std::array<std::uint8_t, 4> inner = {occ[LiH], occ[LiV], occ[RiH], occ[RiV]};
                auto it = groups.try_emplace(inner, fock::BasicFockState<4>(joint.max_photons())).first;
                it->second.add({occ[LoH], occ[LoV], occ[RoH], occ[RoV]}, amp);
            }
            for (auto& [m, outer] : groups) {
                const double e = det.inner_eta;
                auto c = [&](int k) { return p_click(m[k], e, det.pnr); };
                auto d = [&](int k) { return p_dark(m[k], e); };
                // Inner detectors: 0 = cH, 1 = cV, 2 = dH, 3 = dV.
                const double hm = c(0) * c(3) * d(1) * d(2) + c(1) * c(2) * d(0) * d(3);
                const double hp = c(0) * c(1) * d(2) * d(3) + c(2) * c(3) * d(0) * d(1);
                const double n2 = outer.norm_squared();
                herald += w * n2 * (hm + hp);
                if (hm > 0) minus.push_back({w * hm, outer});
                if (hp > 0) plus.push_back({w * hp, outer});
            }
        }

    SwapResult r;
    r.herald_probability = herald;
    r.psi_minus = evaluate_class(minus, det);
    r.psi_plus = evaluate_class(plus, det);
    r.success_probability = r.psi_minus.success_probability + r.psi_plus.success_probability;
    if (r.success_probability > 0)
        r.fidelity = (r.psi_minus.success_probability * r.psi_minus.fidelity
                      + r.psi_plus.success_probability * r.psi_plus.fidelity)
                     / r.success_probability;
    return r;
}

SwapResult swap_once(const SwapScenario& left, const SwapScenario& right)
{
    left.validate();
    right.validate();
    if (left.rep_rate_hz != right.rep_rate_hz) throw ContractError("swap scenarios must share the repetition rate");
    if (left.attempt_rate_hz() != right.attempt_rate_hz())
        throw ContractError("swap scenarios must share the attempt rate");
    if (std::abs(left.inner_efficiency() - right.inner_efficiency()) > 1e-12)
        throw ContractError("swap model needs equal inner-photon efficiency on both sides");
    DetectorModel det;
    det.outer_eta_left = left.outer_efficiency();
    det.outer_eta_right = right.outer_efficiency();
    det.inner_eta = left.inner_efficiency();
    det.pnr = left.pnr && right.pnr;
    SwapResult r = swap_states(source_mixture(left), source_mixture(right), det);
    r.attempt_rate_hz = left.attempt_rate_hz();
    r.rate_hz = r.attempt_rate_hz * r.success_probability;
    return r;
}

double optimise_pump(const SwapScenario& scenario)
{
    if (!scenario.is_spdc()) throw ContractError("pump optimisation applies to SPDC scenarios");
    if (!scenario.fidelity_floor) throw ContractError("pump optimisation needs a fidelity floor");
    const double floor = *scenario.fidelity_floor;
    const double ceiling = photostat::max_single_pair_probability(scenario.spdc_statistics);
    auto fid = [&](double p1) {
        SwapScenario s = scenario;
        s.spdc_p1 = p1;
        s.fidelity_floor.reset();
        return swap_once(s, s).fidelity;
    };

    // Coarse logarithmic scan: checks monotonicity and brackets the crossing.
    const double lo0 = 1e-5;
    constexpr int kScan = 12;
    std::vector<double> grid(kScan), f(kScan);
    for (int k = 0; k < kScan; ++k) {
        grid[k] = lo0 * std::pow(ceiling / lo0, static_cast<double>(k) / (kScan - 1));
        f[k] = fid(grid[k]);
        if (k > 0 && f[k] > f[k - 1] + 1e-6) {
            std::ostringstream msg;
            msg << "swap fidelity is not monotone in P1 near " << grid[k] << " (" << f[k - 1] << " -> " << f[k] << ")";
            throw NumericalError(msg.str());
        }
    }
    if (f[0] < floor) {
        std::ostringstream msg;
        msg << "fidelity floor " << floor << " is unattainable: fidelity is " << f[0] << " at P1 = " << lo0;
        throw ModelDomainError(msg.str());
    }
    if (f[kScan - 1] >= floor) return ceiling;
    int k = 1;
    while (f[k] >= floor) ++k;
    double lo = grid[k - 1], hi = grid[k];
    while ((hi - lo) > 1e-4 * lo) {
        const double mid = 0.5 * (lo + hi);
        (fid(mid) >= floor ? lo : hi) = mid;
    }
    return lo;
}

std::vector<SweepRow> sweep_loss(const SweepConfig& cfg)
{
    if (cfg.loss_grid_db.empty()) throw ContractError("loss grid is empty");
    std::vector<SweepRow> rows;
    for (double loss : cfg.loss_grid_db) {
        SweepRow row;
        row.loss_db = loss;
        SwapScenario qd = cfg.qd;
        qd.channel_loss_db = loss;
        const SwapResult rq = swap_once(qd, qd);
        row.rate_qd = rq.rate_hz;
        row.fidelity_qd = rq.fidelity;

        auto run_spdc = [&](SwapScenario s, double& p1, double* fidelity) {
            s.channel_loss_db = loss;
            if (s.fidelity_floor) s.spdc_p1 = optimise_pump(s);
            p1 = s.spdc_p1;
            s.fidelity_floor.reset();
            const SwapResult r = swap_once(s, s);
            if (fidelity) *fidelity = r.fidelity;
            return r.rate_hz;
        };
        row.rate_spdc = run_spdc(cfg.spdc, row.p1_spdc, &row.fidelity_spdc);
        for (int N : cfg.mux_N) {
            SwapScenario m = cfg.spdc;
            m.source_kind = SourceKind::spdc_multiplexed;
            m.mux_N = N;
            m.pnr = true;
            double p1 = 0.0;
            row.rate_mux.push_back(run_spdc(m, p1, nullptr));
            row.p1_mux.push_back(p1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace qdent::swap
