#include <qdent/errors.hpp>
#include <qdent/tomography.hpp>
#include <qdent/twoqubit.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace qdent;
using namespace qdent::tomography;
using twoqubit::TwoQubitDensity;

namespace {

TwoQubitDensity random_density(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Matrix4c<double> A;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) A(i, j) = cdouble(g(rng), g(rng));
    Matrix4c<double> m = A * A.adjoint();
    return TwoQubitDensity(m / m.trace().real());
}

const MeasurementSetting& find(const std::vector<MeasurementSetting>& s, NamedState a, NamedState b)
{
    for (const auto& m : s)
        if (m.arm1.name == a && m.arm2.name == b) return m;
    throw std::runtime_error("setting not found");
}

} // namespace

TEST(Tomography, NamedKets)
{
    const double r = 1 / std::sqrt(2.0);
    const cdouble i(0, 1);
    EXPECT_NEAR((named_ket(NamedState::R) - Vector2c<double>(r, -i * r)).norm(), 0, 1e-15);
    EXPECT_NEAR((named_ket(NamedState::L) - Vector2c<double>(r, i * r)).norm(), 0, 1e-15);
    EXPECT_EQ(named_state_from_string("D"), NamedState::D);
    EXPECT_EQ(to_string(NamedState::A), "A");
    EXPECT_THROW(named_state_from_string("Q"), ContractError);
}

// Projector of the waveplate setting computed here from the Jones matrices
// written out by hand: HWP at t = [[cos 2t, sin 2t], [sin 2t, -cos 2t]],
// QWP at q = [[c^2 + i s^2, (1 - i) s c], [(1 - i) s c, s^2 + i c^2]].
TEST(Tomography, WaveplateMappingMatchesNamedProjectors)
{
    for (auto s : {NamedState::H, NamedState::V, NamedState::D, NamedState::A, NamedState::R, NamedState::L}) {
        const auto ang = canonical_angles(s);
        const double t = ang.hwp_deg * kPi / 180, q = ang.qwp_deg * kPi / 180;
        const cdouble i(0, 1);
        Matrix2c<double> H, Q;
        H << std::cos(2 * t), std::sin(2 * t), std::sin(2 * t), -std::cos(2 * t);
        const double c = std::cos(q), sn = std::sin(q);
        Q << c * c + i * sn * sn, (1.0 - i) * sn * c, (1.0 - i) * sn * c, sn * sn + i * c * c;
        const Vector2c<double> k = H.adjoint() * Q.adjoint() * Vector2c<double>(1, 0);
        const Matrix2c<double> P = k * k.adjoint();
        const Vector2c<double> n = named_ket(s);
        EXPECT_NEAR((P - n * n.adjoint()).norm(), 0, 1e-12) << to_string(s);
        const Vector2c<double> lib = waveplate_ket(ang);
        EXPECT_NEAR((lib * lib.adjoint() - P).norm(), 0, 1e-12);
    }
}

TEST(Tomography, StandardSettings)
{
    const auto s = standard_settings();
    EXPECT_EQ(s.size(), 36u);
    Matrix4c<double> sum = Matrix4c<double>::Zero();
    for (const auto& m : s) sum += m.projector();
    EXPECT_NEAR((sum - 9.0 * Matrix4c<double>::Identity()).norm(), 0, 1e-12);
}

TEST(Tomography, ExpectedCountExamples)
{
    const auto s = standard_settings();
    const auto singlet = twoqubit::bell_state(twoqubit::BellKind::psi_minus);
    const auto rec = expected_counts(singlet, s, 1000000);
    for (const auto& r : rec) {
        if (r.setting.arm1.name == NamedState::H && r.setting.arm2.name == NamedState::H) {
            EXPECT_EQ(r.counts, 0u);
        }
        if (r.setting.arm1.name == NamedState::H && r.setting.arm2.name == NamedState::V) {
            EXPECT_EQ(r.counts, 500000u);
        }
    }
    for (const auto& r : expected_counts(twoqubit::maximally_mixed(), s, 1000000)) EXPECT_EQ(r.counts, 250000u);
    EXPECT_NEAR(find(s, NamedState::D, NamedState::A).projector().trace().real(), 1.0, 1e-12);
}

TEST(Tomography, SimulatedCountsArePoissonAroundExpectation)
{
    const auto s = standard_settings();
    const auto rho = twoqubit::rho_Q(0.9);
    const auto sim = simulate_counts(rho, s, 100000, 3);
    const auto exp = expected_counts(rho, s, 100000);
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_LE(std::abs(double(sim[i].counts) - double(exp[i].counts)), 5 * std::sqrt(double(exp[i].counts)) + 2);
    EXPECT_EQ(simulate_counts(rho, s, 1000, 9)[5].counts, simulate_counts(rho, s, 1000, 9)[5].counts);
}

TEST(Tomography, NoiselessSingletRecovered)
{
    const auto truth = twoqubit::bell_state(twoqubit::BellKind::psi_minus);
    const auto rec = mle_reconstruct(expected_counts(truth, standard_settings(), 1000000));
    EXPECT_GE(twoqubit::fidelity(rec.state, truth), 0.9999);
    EXPECT_GE(rec.converged_starts, 1);
}

TEST(Tomography, RhoQSingletFraction)
{
    const auto truth = twoqubit::rho_Q(0.92);
    const auto rec = mle_reconstruct(simulate_counts(truth, standard_settings(), 1000000, 7));
    EXPECT_NEAR(twoqubit::singlet_fraction(rec.state).value, 0.96, 0.005);
}

TEST(Tomography, MaximallyMixedEigenvalues)
{
    const auto rec = mle_reconstruct(simulate_counts(twoqubit::maximally_mixed(), standard_settings(), 1000000, 21));
    for (double e : rec.state.eigenvalues()) EXPECT_NEAR(e, 0.25, 0.02);
}

TEST(Tomography, ConsistencyAndMaximality)
{
    std::mt19937_64 rng(123);
    for (int i = 0; i < 10; ++i) {
        const auto truth = random_density(rng);
        const auto records = simulate_counts(truth, standard_settings(), 10000000, 100 + i);
        const auto rec = mle_reconstruct(records);
        EXPECT_GE(twoqubit::fidelity(rec.state, truth), 0.999) << i;
        EXPECT_GE(rec.log_likelihood + 1e-6, log_likelihood(records, truth)) << i;
        EXPECT_NEAR(rec.log_likelihood, log_likelihood(records, rec.state), 1e-6 * std::abs(rec.log_likelihood));
    }
}

TEST(Tomography, IncompleteSettingsThrow)
{
    std::vector<MeasurementSetting> zz;
    for (const auto& m : standard_settings())
        if ((m.arm1.name == NamedState::H || m.arm1.name == NamedState::V)
            && (m.arm2.name == NamedState::H || m.arm2.name == NamedState::V))
            zz.push_back(m);
    EXPECT_THROW(mle_reconstruct(expected_counts(twoqubit::rho_Q(0.9), zz, 1000)), ReconstructionError);
    EXPECT_THROW(mle_reconstruct({}), ContractError);
}

// 10^6 pairs over the nine basis pairs. Reference spread: the linear
// estimator F = (1 - <XX> - <YY> - <ZZ>) / 4 with var<ss> = (1 - E^2) / n.
TEST(Tomography, Bootstrap)
{
    const std::uint64_t n = 1000000 / 9;
    const auto records = simulate_counts(twoqubit::rho_Q(0.92), standard_settings(), n, 5);
    const double sd = bootstrap_uncertainty(records, 100, 1);
    const double E = -0.92;
    const double linear = std::sqrt(3 * (1 - E * E) / double(n)) / 4;
    EXPECT_GT(sd, 0.5 * linear);
    EXPECT_LT(sd, 1.2 * linear);
    const auto few = simulate_counts(twoqubit::rho_Q(0.92), standard_settings(), n / 100, 5);
    EXPECT_NEAR(bootstrap_uncertainty(few, 100, 1) / sd, 10.0, 3.0);
    EXPECT_THROW(bootstrap_uncertainty(records, 1, 1), ContractError);
    const auto exact = expected_counts(twoqubit::rho_Q(0.92), standard_settings(), 1000000000000ULL);
    EXPECT_LT(bootstrap_uncertainty(exact, 50, 1), 1e-4);
}

TEST(Tomography, CsvRoundTrip)
{
    auto records = simulate_counts(twoqubit::rho_Q(0.8), standard_settings(), 5000, 2);
    records[3].setting.arm1 = ArmSetting::from_angles({12.5, -3.25});
    records[3].integration_s = 2.5;
    std::stringstream ss;
    write_records_csv(ss, records);
    const auto back = read_records_csv(ss);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(back[i].counts, records[i].counts);
        EXPECT_EQ(back[i].integration_s, records[i].integration_s);
        EXPECT_EQ(back[i].setting.arm1.name, records[i].setting.arm1.name);
        EXPECT_NEAR((back[i].setting.projector() - records[i].setting.projector()).norm(), 0, 1e-12);
    }
    std::stringstream bad("nonsense\n1,2\n");
    EXPECT_THROW(read_records_csv(bad), ContractError);
}
