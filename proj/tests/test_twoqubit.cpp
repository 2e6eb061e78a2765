#include "oracles.hpp"

#include <qdent/errors.hpp>
#include <qdent/optim.hpp>
#include <qdent/quadrature.hpp>
#include <qdent/serialization.hpp>
#include <qdent/twoqubit.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace qdent;
using namespace qdent::twoqubit;

namespace {

TwoQubitDensity random_density(std::mt19937_64& rng, int rank = 4)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXcd A(4, rank);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < rank; ++j) A(i, j) = cdouble(g(rng), g(rng));
    Matrix4c<double> m = A * A.adjoint();
    m /= m.trace().real();
    return TwoQubitDensity(m);
}

Matrix2c<double> random_su2(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0, 2 * kPi);
    return su2_from_euler(u(rng), u(rng) / 2, u(rng));
}

} // namespace

TEST(TwoQubit, BellStates)
{
    auto s = bell_state(BellKind::psi_minus);
    EXPECT_TRUE(s.is_pure());
    EXPECT_NEAR(s.matrix().trace().real(), 1.0, 1e-15);
    EXPECT_NEAR(singlet_fraction(s).value, 1.0, 1e-9);
    EXPECT_NEAR(singlet_fraction(bell_state(BellKind::phi_plus)).value, 1.0, 1e-9);
    for (double phi : {0.0, 0.3, -1.2, 2.9})
        EXPECT_NEAR(singlet_fraction(bell_state(BellKind::psi_plus, phi)).value, 1.0, 1e-9);
}

TEST(TwoQubit, PsiPlusPhaseConvention)
{
    const double phi = -11.0 * kPi / 180.0;
    auto s = bell_state(BellKind::psi_plus, phi);
    // (|HV> + e^{i phi}|VH>)/sqrt2: coherence element <HV|rho|VH> = e^{-i phi}/2
    EXPECT_NEAR(std::abs(s.matrix()(1, 2) - std::polar(0.5, -phi)), 0, 1e-12);
    EXPECT_NEAR(s.matrix()(1, 1).real(), 0.5, 1e-12);
}

TEST(TwoQubit, ConstructorRejectsInvalid)
{
    Matrix4c<double> m = Matrix4c<double>::Identity();
    EXPECT_THROW(TwoQubitDensity{m}, ContractError);
    m = Matrix4c<double>::Identity() / 4;
    m(0, 0) = -0.1;
    m(1, 1) = 0.6;
    EXPECT_THROW(TwoQubitDensity{m}, ContractError);
}

TEST(TwoQubit, SourceComponents)
{
    const auto singlet = bell_state(BellKind::psi_minus);
    EXPECT_NEAR(overlap_with(rho_B_zero(), singlet), 0.0, 1e-15);
    EXPECT_NEAR(overlap_with(rho_B_half(), singlet), 0.5, 1e-15);
    EXPECT_NEAR(rho_B_zero().matrix().trace().real(), 1.0, 1e-15);
    EXPECT_NEAR(rho_B_half().matrix().trace().real(), 1.0, 1e-15);
    EXPECT_NEAR((rho_Q(1.0).matrix() - singlet.matrix()).norm(), 0, 1e-12);
    EXPECT_NEAR((rho_Q(0.0).matrix() - rho_B_half().matrix()).norm(), 0, 1e-12);
    EXPECT_NEAR(singlet_fraction(rho_Q(0.968)).value, 0.984, 1e-9);
    EXPECT_NEAR(overlap_with(rho_Q(0.968), singlet), 0.984, 1e-12);
    for (double I : {0.0, 0.2, 0.5, 0.968, 1.0}) {
        const Matrix4c<double> lin = I * singlet.matrix() + (1 - I) * rho_B_half().matrix();
        EXPECT_NEAR((rho_Q(I).matrix() - lin).norm(), 0, 1e-12);
    }
}

TEST(TwoQubit, EigenvalueFloor)
{
    for (const auto& s : {rho_Q(0.3), rho_B_zero(), rho_B_half(), werner(0.2), maximally_mixed(),
                          bell_state(BellKind::phi_minus, 0.7)})
        EXPECT_GE(s.eigenvalues().minCoeff(), -1e-12);
}

TEST(TwoQubit, OverlapExamples)
{
    const auto singlet = bell_state(BellKind::psi_minus);
    EXPECT_NEAR(overlap_with(singlet, singlet), 1.0, 1e-15);
    EXPECT_NEAR(overlap_with(maximally_mixed(), bell_state(BellKind::phi_plus)), 0.25, 1e-15);
    EXPECT_THROW(overlap_with(singlet, maximally_mixed()), ContractError);
    EXPECT_NEAR(singlet_fraction(maximally_mixed()).value, 0.25, 1e-9);
}

TEST(TwoQubit, UhlmannFidelity)
{
    std::mt19937_64 rng(2);
    auto r = random_density(rng);
    EXPECT_NEAR(fidelity(r, r), 1.0, 1e-8);
    const auto s = bell_state(BellKind::psi_minus);
    EXPECT_NEAR(fidelity(r, s), overlap_with(r, s), 1e-8);
}

TEST(TwoQubit, WernerMatchesGridOracle)
{
    for (double p : {0.3, 0.7, 0.95}) {
        const auto w = werner(p);
        const double closed = p + (1 - p) / 4;
        EXPECT_NEAR(singlet_fraction(w).value, closed, 1e-4);
        EXPECT_NEAR(oracle::grid_fef(w.matrix(), 3), closed, 1e-4);
    }
}

TEST(TwoQubit, SingletFractionMatchesMagicBasisOracle)
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        const auto rho = random_density(rng, 1 + i % 4);
        EXPECT_NEAR(singlet_fraction(rho).value, oracle::magic_fef(rho.matrix()), 1e-6) << i;
    }
}

TEST(TwoQubit, SingletFractionLocalInvariance)
{
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const auto rho = random_density(rng, 1 + i % 4);
        const auto rotated = apply_local(rho, random_su2(rng), random_su2(rng));
        EXPECT_NEAR(singlet_fraction(rho).value, singlet_fraction(rotated).value, 1e-6);
    }
}

TEST(TwoQubit, SingletFractionBoundsBellOverlaps)
{
    std::mt19937_64 rng(10);
    for (int i = 0; i < 20; ++i) {
        const auto rho = random_density(rng);
        const double f = singlet_fraction(rho).value;
        for (auto k : {BellKind::psi_minus, BellKind::psi_plus, BellKind::phi_minus, BellKind::phi_plus})
            EXPECT_GE(f + 1e-12, overlap_with(rho, bell_state(k)));
    }
}

TEST(TwoQubit, RotateToSingletFrame)
{
    const auto rho = apply_local(werner(0.8), su2_from_euler(0.4, 1.1, -0.7), Matrix2c<double>::Identity());
    const auto sf = singlet_fraction(rho);
    const auto r = rotate_to_singlet_frame(rho, sf);
    EXPECT_NEAR(overlap_with(r, bell_state(BellKind::psi_minus)), sf.value, 1e-6);
}

TEST(TwoQubit, NearestPhysicalClipsNegatives)
{
    Matrix4c<double> m = Matrix4c<double>::Zero();
    m(0, 0) = 0.7;
    m(1, 1) = 0.4;
    m(2, 2) = -0.1;
    auto r = TwoQubitDensity::nearest_physical(m);
    EXPECT_GE(r.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(r.matrix().trace().real(), 1.0, 1e-12);
}

TEST(TwoQubit, DensityJsonRoundTrip)
{
    std::mt19937_64 rng(4);
    const auto rho = random_density(rng);
    const auto j = io::density_to_json(rho);
    ASSERT_EQ(j.size(), 4u);
    EXPECT_EQ(j[1][2][0].get<double>(), rho.matrix()(1, 2).real());
    EXPECT_EQ(io::density_from_json(j).matrix(), rho.matrix());
    EXPECT_THROW(io::density_from_json(io::json::array()), ConfigError);
}

TEST(Optim, BfgsRosenbrock)
{
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        if (g) {
            g->resize(2);
            (*g)[0] = -2 * a - 400 * x[0] * b;
            (*g)[1] = 200 * b;
        }
        return a * a + 100 * b * b;
    };
    auto r = optim::minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(Optim, LevenbergMarquardtLine)
{
    Eigen::VectorXd xs(5), ys(5);
    xs << 0, 1, 2, 3, 4;
    ys << 1.1, 2.9, 5.2, 7.1, 8.8;
    auto res = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return (p[0] + p[1] * xs.array() - ys.array()).matrix(); };
    auto r = optim::levenberg_marquardt(res, Eigen::Vector2d(0, 0));
    // normal equations by hand
    const double n = 5, sx = xs.sum(), sy = ys.sum(), sxx = xs.squaredNorm(), sxy = xs.dot(ys);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(r.x[1], slope, 1e-8);
    EXPECT_NEAR(r.x[0], (sy - slope * sx) / n, 1e-8);
}

TEST(Quadrature, GaussKronrodAndSimpson)
{
    auto r = quadrature::integrate([](double x) { return std::exp(-x * x); }, -8, 8);
    EXPECT_NEAR(r.value, std::sqrt(kPi), 1e-10);
    EXPECT_NEAR(quadrature::simpson([](double x) { return x * x * x; }, 0, 2, 10), 4.0, 1e-12);
}
