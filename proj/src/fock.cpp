#include <qdent/fock.hpp>

namespace qdent::fock {

Matrix2c<double> beamsplitter_matrix(double transmissivity)
{
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
        throw ParameterError("beamsplitter transmissivity must lie in [0, 1]");
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    Matrix2c<double> u;
    u << t, cdouble(0, r),
         cdouble(0, r), t;
    return u;
}

FockState apply_beamsplitter(const FockState& state, const BeamsplitterSpec& spec)
{
    const Matrix2c<double> uh = beamsplitter_matrix(spec.transmissivity_H);
    const Matrix2c<double> uv = beamsplitter_matrix(spec.transmissivity_V);
    constexpr auto aH = mode_index(InputPort::a, Polarisation::H);
    constexpr auto bH = mode_index(InputPort::b, Polarisation::H);
    constexpr auto aV = mode_index(InputPort::a, Polarisation::V);
    constexpr auto bV = mode_index(InputPort::b, Polarisation::V);
    return apply_two_mode(apply_two_mode(state, aH, bH, uh), aV, bV, uv);
}

namespace {

// Amplitudes of the one-photon-per-port sector in (HH, HV, VH, VV) order.
Vector4c<double> coincidence_vector(const FockState& state)
{
    constexpr auto cH = mode_index(OutputPort::c, Polarisation::H);
    constexpr auto cV = mode_index(OutputPort::c, Polarisation::V);
    constexpr auto dH = mode_index(OutputPort::d, Polarisation::H);
    constexpr auto dV = mode_index(OutputPort::d, Polarisation::V);
    Vector4c<double> v = Vector4c<double>::Zero();
    for (const auto& [occ, amp] : state.terms()) {
        if (occ[cH] + occ[cV] != 1 || occ[dH] + occ[dV] != 1) continue;
        const int qc = occ[cV];  // 0 = H, 1 = V
        const int qd = occ[dV];
        v(2 * qc + qd) += amp;
    }
    return v;
}

} // namespace

PostSelection post_select_coincidence(const FockState& state)
{
    return post_select_coincidence(FockMixture{{1.0, state}});
}

PostSelection post_select_coincidence(const FockMixture& mixture)
{
    Matrix4c<double> acc = Matrix4c<double>::Zero();
    double total = 0.0;
    double weight_sum = 0.0;
    for (const auto& [w, s] : mixture) {
        if (w < 0) throw ContractError("mixture weights must be non-negative");
        const double n2 = s.norm_squared();
        weight_sum += w;
        if (!(n2 > 0)) continue;
        const Vector4c<double> v = coincidence_vector(s);
        acc += (w / n2) * v * v.adjoint();
        total += (w / n2) * v.squaredNorm();
    }
    PostSelection out;
    if (weight_sum > 0) total /= weight_sum;
    out.probability = total;
    if (total <= 1e-300) {
        out.probability = 0.0;
        return out;
    }
    Matrix4c<double> rho = acc / acc.trace().real();
    out.state = twoqubit::TwoQubitDensity(0.5 * (rho + rho.adjoint()));
    return out;
}

FockState emission_state(std::span<const double> probabilities, std::size_t mode, int max_photons)
{
    std::vector<cdouble> amps;
    amps.reserve(probabilities.size());
    for (double p : probabilities) {
        if (p < 0) throw ParameterError("photon-number probabilities must be non-negative");
        amps.emplace_back(std::sqrt(p));
    }
    while (!amps.empty() && amps.back() == cdouble{}) amps.pop_back();
    if (static_cast<int>(amps.size()) - 1 > max_photons)
        throw ModelDomainError("emission distribution exceeds photon-number truncation");
    return single_mode_state<4>(mode, amps, max_photons);
}

} // namespace qdent::fock
