#include <qdent/errors.hpp>
#include <qdent/swap.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace qdent;
using namespace qdent::swap;

namespace {

SwapScenario ideal_qd(double eta, double loss_db = 0)
{
    SwapScenario s = fig5_qd();
    s.qd_g2 = 0;
    s.qd_I = 1;
    s.eta_s = eta;
    s.eta_det = 1;
    s.channel_loss_db = loss_db;
    return s;
}

SwapScenario spdc_at(double p1, bool pnr)
{
    SwapScenario s = fig5_spdc(pnr);
    s.fidelity_floor.reset();
    s.spdc_p1 = p1;
    return s;
}

} // namespace

TEST(Swap, ScenarioValidation)
{
    SwapScenario s = fig5_qd();
    s.eta_s = 1.2;
    EXPECT_THROW(s.validate(), ParameterError);
    s = fig5_multiplexed(0);
    EXPECT_THROW(s.validate(), ParameterError);
    s = fig5_qd();
    s.channel_loss_db = -1;
    EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Swap, PairRateExamples)
{
    SwapScenario q = ideal_qd(1.0);
    q.rep_rate_hz = 76.3e6;
    EXPECT_DOUBLE_EQ(max_pair_rate_bound(q), 38.15e6);
    EXPECT_DOUBLE_EQ(pair_rate(q), 76.3e6 / 4);

    SwapScenario s = spdc_at(0.01, false);
    s.rep_rate_hz = 76.3e6;
    s.eta_s = 0.8;
    EXPECT_NEAR(pair_rate(s), 0.488e6, 0.001e6);

    const double setup = 0.45907;
    const double expect[] = {55.0e6, 74.6e6, 116.4e6};
    int i = 0;
    for (double eta : {0.49, 0.57, 0.712}) {
        SwapScenario g = fig5_qd();
        g.rep_rate_hz = 2e9;
        g.eta_s = eta;
        g.setup_eta = setup;
        EXPECT_NEAR(pair_rate(g), expect[i], 0.01 * expect[i]) << eta;
        ++i;
    }
}

TEST(Swap, MultiplexedPairRate)
{
    SwapScenario m = fig5_multiplexed(10);
    m.fidelity_floor.reset();
    m.spdc_p1 = 0.05;
    const double ps = m.eta_s * m.switch_eta * m.insertion_eta;
    EXPECT_NEAR(pair_rate(m), m.rep_rate_hz * (1 - std::pow(0.95, 10)) * ps * ps, 1e-6);
    // no source fires only if all ten emit vacuum
    const auto d = spdc_output_distribution(m);
    const double vac = photostat::spdc_pair_distribution(0.05, m.spdc_statistics, m.spdc_max_pairs)[0];
    EXPECT_NEAR(d[0], std::pow(vac, 10), 1e-12);
}

TEST(Swap, IdealQdFidelityIndependentOfLoss)
{
    double prev = 1e300;
    for (double loss : {0.0, 5.0, 20.0, 40.0}) {
        const auto s = ideal_qd(0.71, loss);
        const auto r = swap_once(s, s);
        EXPECT_NEAR(r.fidelity, 1.0, 1e-9) << loss;
        EXPECT_LE(r.rate_hz, prev);
        prev = r.rate_hz;
    }
}

TEST(Swap, IdealQdLossless)
{
    const auto s = ideal_qd(1.0);
    const auto r = swap_once(s, s);
    EXPECT_NEAR(r.fidelity, 1.0, 1e-12);
    // BSM 1/2 times the two source post-selections 1/2 each
    EXPECT_NEAR(r.success_probability, 0.125, 1e-12);
    EXPECT_NEAR(r.rate_hz, s.rep_rate_hz / 2 * 0.125, 1e-3);
    EXPECT_NEAR(r.psi_minus.success_probability, r.psi_plus.success_probability, 1e-12);
}

// Leading-order herald probabilities: eta^2 / 8 (QD, exact) and P1^2 eta^2 / 2 (SPDC).
TEST(Swap, HeraldProbabilityMatchesClosedForm)
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 10; ++i) {
        const double eta = 0.02 + 0.98 * u(rng);
        const auto q = ideal_qd(eta);
        EXPECT_NEAR(swap_once(q, q).herald_probability, eta * eta / 8, 1e-12);

        SwapScenario s = spdc_at(1e-4 + 0.004 * u(rng), false);
        s.eta_s = 0.01 + 0.09 * u(rng);
        s.eta_det = 1;
        const double ei = s.inner_efficiency();
        const double lead = s.spdc_p1 * s.spdc_p1 * ei * ei / 2;
        const double h = swap_once(s, s).herald_probability;
        EXPECT_LE(std::abs(h - lead), lead * (8 * s.spdc_p1 + 2 * ei)) << i;
    }
}

TEST(Swap, DefaultQdSwapFidelity)
{
    const auto r = swap_once(fig5_qd(), fig5_qd());
    EXPECT_NEAR(r.fidelity, 0.97, 0.015);
    EXPECT_GT(r.rate_hz, 0);
}

TEST(Swap, HighPumpWithoutPnrDegrades)
{
    const auto lo = swap_once(spdc_at(0.01, false), spdc_at(0.01, false));
    const auto hi = swap_once(spdc_at(0.2, false), spdc_at(0.2, false));
    EXPECT_LT(hi.fidelity, 0.9);
    EXPECT_GT(hi.rate_hz, lo.rate_hz);
}

TEST(Swap, PnrNeverWorse)
{
    for (double p1 : {0.001, 0.01, 0.05, 0.1, 0.2}) {
        const auto a = swap_once(spdc_at(p1, false), spdc_at(p1, false));
        const auto b = swap_once(spdc_at(p1, true), spdc_at(p1, true));
        EXPECT_GE(b.fidelity + 1e-12, a.fidelity) << p1;
    }
}

TEST(Swap, RateMonotoneInLoss)
{
    for (const SwapScenario& base : {fig5_qd(), spdc_at(0.03, true), spdc_at(0.03, false)}) {
        double prev = 1e300;
        for (double loss = 0; loss <= 40; loss += 5) {
            SwapScenario s = base;
            s.channel_loss_db = loss;
            const double r = swap_once(s, s).rate_hz;
            EXPECT_LE(r, prev * (1 + 1e-12));
            prev = r;
        }
    }
}

TEST(Swap, AsymmetricScenariosRejected)
{
    SwapScenario a = fig5_qd(), b = fig5_qd();
    b.rep_rate_hz = 80e6;
    EXPECT_THROW(swap_once(a, b), ContractError);
    b = fig5_qd();
    b.channel_loss_db = 3;
    EXPECT_THROW(swap_once(a, b), ContractError);
    EXPECT_THROW(swap_once(a, spdc_at(0.01, true)), ContractError);
}

TEST(Swap, OptimisePump)
{
    SwapScenario s = fig5_spdc(false);
    s.fidelity_floor = 0.0;
    EXPECT_DOUBLE_EQ(optimise_pump(s), photostat::max_single_pair_probability(s.spdc_statistics));
    s.fidelity_floor = 1.0;
    EXPECT_THROW(optimise_pump(s), ModelDomainError);
    s.fidelity_floor.reset();
    EXPECT_THROW(optimise_pump(s), ContractError);

    const double p_plain = optimise_pump(fig5_spdc(false));
    const double p_pnr = optimise_pump(fig5_spdc(true));
    EXPECT_GT(p_pnr, p_plain);
    SwapScenario at = spdc_at(p_plain, false);
    EXPECT_NEAR(swap_once(at, at).fidelity, 0.97, 1e-3);
}

TEST(Swap, SweepZeroLossMatchesSwapOnce)
{
    SweepConfig cfg;
    cfg.loss_grid_db = {0, 10};
    cfg.mux_N = {10};
    const auto rows = sweep_loss(cfg);
    ASSERT_EQ(rows.size(), 2u);
    const auto q = swap_once(cfg.qd, cfg.qd);
    EXPECT_DOUBLE_EQ(rows[0].rate_qd, q.rate_hz);
    EXPECT_DOUBLE_EQ(rows[0].fidelity_qd, q.fidelity);
    SwapScenario s = cfg.spdc;
    s.spdc_p1 = rows[0].p1_spdc;
    s.fidelity_floor.reset();
    EXPECT_NEAR(rows[0].rate_spdc, swap_once(s, s).rate_hz, 1e-9 * rows[0].rate_spdc);
    EXPECT_LT(rows[1].rate_qd, rows[0].rate_qd);
    ASSERT_EQ(rows[0].rate_mux.size(), 1u);
}
