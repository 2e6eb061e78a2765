#include <qdent/errors.hpp>
#include <qdent/timetag.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace qdent;
using namespace qdent::timetag;

namespace {

// CDF of a Gaussian (sd w) plus an independent exponential (mean T).
double emg_cdf(double t, double w, double T)
{
    auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double a = t / w - w / T;
    // exp(-t/T + w^2/2T^2) Phi(a), written to stay finite far in either tail
    const double tail = a < -30 ? 0.0 : std::exp(-t / T + w * w / (2 * T * T) + std::log(std::max(Phi(a), 1e-300)));
    return Phi(t / w) - tail;
}

// Brute-force histogram of all pair differences.
std::vector<std::uint64_t> brute_histogram(const TimeTagStream& s, std::uint16_t a, std::uint16_t b, std::int64_t bin,
                                           std::int64_t span)
{
    const std::int64_t n = (2 * span + bin - 1) / bin;
    std::vector<std::uint64_t> h(n, 0);
    for (auto ta : s.channel_times(a))
        for (auto tb : s.channel_times(b)) {
            const std::int64_t d = tb - ta;
            if (d < -span || d >= span) continue;
            const std::int64_t k = static_cast<std::int64_t>(std::floor(double(d + span) / double(bin)));
            if (k < n) ++h[k];
        }
    return h;
}

SynthesisParams hbt(double g2, std::uint64_t pulses, std::uint64_t seed)
{
    SynthesisParams p;
    p.g2 = g2;
    p.pulses = pulses;
    p.seed = seed;
    return p;
}

G2Estimate measure_g2(const TimeTagStream& s)
{
    const std::int64_t T = s.clock().period_ps();
    return g2_from_histogram(coincidence_histogram(s, channel::d1, channel::d2, 10, 6 * T + T / 2), T);
}

TimeTagStream periodic(std::uint16_t ch, std::int64_t phase, int n, std::int64_t T = 13106)
{
    std::vector<TimeTag> r;
    for (int k = 0; k < n; ++k) r.push_back({ch, phase + k * T});
    return TimeTagStream(r, Clock{1e12 / double(T), std::nullopt});
}

} // namespace

TEST(Timetag, BinaryRoundTrip)
{
    auto s = synthesize_stream(hbt(0.02, 2000, 4));
    s.set_t_zero(-17);
    std::stringstream ss;
    write_binary(ss, s);
    EXPECT_EQ(ss.str().size(), 32 + 10 * s.size());
    EXPECT_EQ(read_binary(ss), s);

    const auto plain = synthesize_stream(hbt(0.02, 100, 4));
    std::stringstream s2;
    write_binary(s2, plain);
    EXPECT_FALSE(read_binary(s2).clock().t_zero_ps.has_value());

    std::stringstream bad("not a stream at all, definitely not");
    EXPECT_THROW(read_binary(bad), ContractError);
}

TEST(Timetag, StreamInvariants)
{
    EXPECT_THROW(TimeTagStream({{1, 10}, {1, 5}}, Clock{}), ContractError);
    const auto s = synthesize_stream(hbt(0.02, 5000, 2));
    EXPECT_TRUE(std::is_sorted(s.records().begin(), s.records().end(),
                               [](const TimeTag& a, const TimeTag& b) { return a.time_ps < b.time_ps; }));
    EXPECT_EQ(s.count(channel::laser), 5000u);
    EXPECT_EQ(synthesize_stream(hbt(0.02, 5000, 2)), s);
    EXPECT_FALSE(synthesize_stream(hbt(0.02, 5000, 3)) == s);
}

TEST(Timetag, DelayDistributionFollowsProfile)
{
    SynthesisParams p = hbt(0.0, 20000, 9);
    p.jitter_fwhm_ps = 0;
    p.efficiency = 0.5;
    const auto s = synthesize_stream(p);
    const std::int64_t T = s.clock().period_ps();
    std::vector<std::int64_t> d;
    for (const auto& r : s.records())
        if (r.channel != channel::laser) {
            std::int64_t x = ((r.time_ps - p.pulse_offset_ps) % T + T) % T;
            d.push_back(x > T / 2 ? x - T : x);
        }
    std::sort(d.begin(), d.end());
    ASSERT_GT(d.size(), 5000u);
    // integer rounding: observed <= k  <=>  true delay < k + 1/2
    double ks = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double F = emg_cdf(double(d[i]) + 0.5, p.pulse_width_ps, p.T1_ps);
        const double lo = double(i) / d.size();
        std::size_t j = i;
        while (j + 1 < d.size() && d[j + 1] == d[i]) ++j;
        ks = std::max({ks, std::abs(F - double(j + 1) / d.size()), std::abs(emg_cdf(double(d[i]) - 0.5, p.pulse_width_ps, p.T1_ps) - lo)});
        i = j;
    }
    EXPECT_LT(ks, 1.63 / std::sqrt(double(d.size())));
}

TEST(Timetag, HistogramMatchesBruteForce)
{
    const auto s = synthesize_stream(hbt(0.05, 3000, 12));
    for (std::int64_t bin : {1, 7, 100}) {
        const auto h = coincidence_histogram(s, channel::d1, channel::d2, bin, 40000);
        EXPECT_EQ(h.counts, brute_histogram(s, channel::d1, channel::d2, bin, 40000)) << bin;
        EXPECT_EQ(h.first_edge_ps, -40000);
    }
    const auto empty = coincidence_histogram(s, channel::d1, 7, 10, 1000);
    EXPECT_TRUE(empty.empty_channel);
    EXPECT_EQ(empty.total(), 0u);
}

TEST(Timetag, PeriodicChannelsGiveDeltaPeaks)
{
    auto a = periodic(1, 100, 50);
    std::vector<TimeTag> both = a.records();
    for (auto r : a.records()) both.push_back({2, r.time_ps});
    std::stable_sort(both.begin(), both.end(), [](auto& x, auto& y) { return x.time_ps < y.time_ps; });
    const TimeTagStream s(both, a.clock());
    const auto h = coincidence_histogram(s, 1, 2, 1, 3 * 13106 + 1);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const std::int64_t t = h.bin_start(i);
        if (h.counts[i]) {
            EXPECT_EQ(t % 13106, 0) << t;
        }
    }
    EXPECT_EQ(h.counts[static_cast<std::size_t>(-h.first_edge_ps)], 50u);
}

TEST(Timetag, IndependentPoissonChannelsAreFlat)
{
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> gap(1.0 / 500.0);
    std::vector<TimeTag> r;
    for (std::uint16_t ch : {1, 2}) {
        double t = 0;
        for (int i = 0; i < 40000; ++i) r.push_back({ch, std::llround(t += gap(rng))});
    }
    std::stable_sort(r.begin(), r.end(), [](auto& x, auto& y) { return x.time_ps < y.time_ps; });
    const TimeTagStream s(r, Clock{});
    const auto h = coincidence_histogram(s, 1, 2, 1000, 20000);
    double mean = double(h.total()) / h.counts.size();
    for (auto c : h.counts) EXPECT_LT(std::abs(double(c) - mean), 5 * std::sqrt(mean));
}

TEST(Timetag, G2RecoveredWithinThreeSigma)
{
    for (double g2 : {0.0, 0.01, 0.02, 0.05}) {
        const auto e = measure_g2(synthesize_stream(hbt(g2, 3000000, 31)));
        EXPECT_LE(std::abs(e.g2 - g2), 3 * e.stat_err) << g2 << " measured " << e.g2 << " +- " << e.stat_err;
        EXPECT_EQ(e.side_peaks, 12);
    }
}

TEST(Timetag, NoiseRejectionRemovesCentralPeak)
{
    SynthesisParams p = hbt(0.05, 1000000, 5);
    p.noise_rejection_prob = 1.0;
    const auto e = measure_g2(synthesize_stream(p));
    EXPECT_EQ(e.central_area, 0.0);
    EXPECT_LT(e.g2, 3 * e.stat_err);
}

TEST(Timetag, PoissonianEmissionGivesUnity)
{
    SynthesisParams p = hbt(0.0, 400000, 6);
    p.emission = Emission::poissonian;
    p.mean_photons = 0.1;
    p.efficiency = 0.5;
    const auto e = measure_g2(synthesize_stream(p));
    EXPECT_LE(std::abs(e.g2 - 1.0), 3 * e.stat_err + 0.01);
}

TEST(Timetag, G2NeedsFiveSidePeaks)
{
    const auto s = synthesize_stream(hbt(0.02, 2000, 1));
    const std::int64_t T = s.clock().period_ps();
    EXPECT_THROW(g2_from_histogram(coincidence_histogram(s, 1, 2, 10, 4 * T), T), ContractError);
}

TEST(Timetag, Normalisations)
{
    EXPECT_NEAR(cross_pol_normalisation(342394.5, 5940356.0), 17.35, 0.005);
    EXPECT_NEAR(cross_pol_normalisation(111802.5, 199306.0), 1.78, 0.005);
    EXPECT_EQ(cross_pol_normalisation(3.0, 3.0), 1.0);
    EXPECT_THROW(cross_pol_normalisation(0.0, 1.0), ParameterError);
}

TEST(Timetag, HomCorrection)
{
    EXPECT_NEAR(hom_corrected_visibility({0.915, 0.015, 0.467, 0.533, 0.015, 1}), 0.981, 0.002);
    EXPECT_NEAR(hom_corrected_visibility({0.912, 0.017, 0.467, 0.533, 0.012, 1}), 0.976, 0.002);
    EXPECT_EQ(hom_corrected_visibility({1, 0, 0.5, 0.5, 0, 1}), 1.0);
    EXPECT_THROW(hom_corrected_visibility({1, 0, 0, 1, 0, 1}), ParameterError);
}

TEST(Timetag, JitterFitOnGaussianSamples)
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0, 14.9);
    Histogram h;
    h.first_edge_ps = -200;
    h.bin_ps = 2;
    h.counts.assign(200, 0);
    for (int i = 0; i < 200000; ++i) {
        const auto k = static_cast<std::int64_t>(std::floor((g(rng) + 200) / 2));
        if (k >= 0 && k < 200) ++h.counts[k];
    }
    const auto f = fit_jitter(h);
    EXPECT_NEAR(f.fwhm_ps, 35.1, 0.5);
    EXPECT_NEAR(f.centre_ps, 0.0, 0.5);
    EXPECT_GT(f.fit_error, 0.0);
}

TEST(Timetag, JitterFitOnDelta)
{
    Histogram h;
    h.first_edge_ps = 0;
    h.bin_ps = 5;
    h.counts.assign(40, 0);
    h.counts[17] = 1000;
    EXPECT_LE(fit_jitter(h).fwhm_ps, 5.0);
}

TEST(Timetag, JitterFitOnSyntheticLaser)
{
    SynthesisParams p = hbt(0.0, 100000, 8);
    p.pulse_offset_ps = 500;
    const auto h = phase_histogram(synthesize_stream(p), channel::laser, 2);
    EXPECT_NEAR(fit_jitter(h).fwhm_ps, 35.0, 35.0 * 0.05);
}

TEST(Timetag, FilterEdgeCases)
{
    auto s = synthesize_stream(hbt(0.02, 20000, 3));
    EXPECT_THROW(apply_temporal_filter(s, {0, 100}), ContractError);
    s.set_t_zero(reference_from_pulse_histogram(s));
    const double T = double(s.clock().period_ps());
    const auto full = apply_temporal_filter(s, {-T / 2, T / 2});
    EXPECT_EQ(full.records(), s.records());
    EXPECT_EQ(apply_temporal_filter(s, {20, 20}).size(), 0u);
    EXPECT_THROW(apply_temporal_filter(s, {0, T + 1}), ContractError);
    EXPECT_THROW(apply_temporal_filter(s, {10, 0}), ContractError);
    EXPECT_EQ(full.metadata.count("filter_window_ps"), 1u);
}

TEST(Timetag, FilterIdempotentAndMonotone)
{
    auto s = synthesize_stream(hbt(0.02, 50000, 13));
    s.set_t_zero(reference_from_pulse_histogram(s));
    const double T = double(s.clock().period_ps());
    for (double on : {-45.0, 0.0, 20.0, 35.0}) {
        const FilterWindow w{on, T - 45};
        const auto once = apply_temporal_filter(s, w);
        EXPECT_EQ(apply_temporal_filter(once, w).records(), once.records());
    }
    std::size_t prev = s.size() + 1;
    for (double on : {-100.0, -45.0, -10.0, 0.0, 10.0, 35.0, 80.0}) {
        const std::size_t n = apply_temporal_filter(s, {on, 600}).size();
        EXPECT_LE(n, prev);
        prev = n;
    }
    std::size_t prev2 = 0;
    for (double off : {50.0, 100.0, 400.0, 2000.0}) {
        const std::size_t n = apply_temporal_filter(s, {0, off}).size();
        EXPECT_GE(n, prev2);
        prev2 = n;
    }
}

TEST(Timetag, ReferenceFromPulses)
{
    EXPECT_EQ(reference_from_pulse_histogram(periodic(channel::laser, 100, 500)), 100);
    // two equal modes: 40 and 90 ps
    std::vector<TimeTag> r;
    for (int k = 0; k < 20; ++k) {
        r.push_back({0, 90 + 2 * k * 13106});
        r.push_back({0, 40 + (2 * k + 1) * 13106});
    }
    EXPECT_EQ(reference_from_pulse_histogram(TimeTagStream(r, Clock{1e12 / 13106.0, std::nullopt})), 40);
    EXPECT_THROW(reference_from_pulse_histogram(periodic(3, 100, 10)), ContractError);
}

// Single-bin mode of a 35 ps FWHM peak is noisy; the check is statistical over seeds.
TEST(Timetag, ReferenceOfJitteredPulses)
{
    int within = 0;
    std::vector<long> err;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthesisParams p = hbt(0.0, 100000, seed);
        p.pulse_offset_ps = 100;
        p.efficiency = 0;
        const auto t0 = reference_from_pulse_histogram(synthesize_stream(p));
        err.push_back(std::labs(long(t0) - 100));
        within += err.back() <= 2;
    }
    std::sort(err.begin(), err.end());
    EXPECT_GE(within, 16);
    EXPECT_LE(err[err.size() / 2], 2);
}

TEST(Timetag, CountCoincidencesRequiresOneClickPerPort)
{
    const std::int64_t T = 13106;
    const std::vector<TimeTag> r = {
        {channel::c_plus, 10},      {channel::d_minus, 40},                              // +-
        {channel::c_minus, T + 5},  {channel::c_plus, T + 6}, {channel::d_plus, T + 30}, // two in c: dropped
        {channel::c_minus, 2 * T},  {channel::d_plus, 2 * T + 1},                        // -+
        {channel::d_plus, 3 * T},                                                        // single: dropped
        {channel::c_plus, 4 * T},   {channel::d_plus, 4 * T + 100},                      // ++
    };
    TimeTagStream s(r, Clock{1e12 / double(T), 0});
    const auto c = count_coincidences(s);
    EXPECT_EQ(c.pp, 1u);
    EXPECT_EQ(c.pm, 1u);
    EXPECT_EQ(c.mp, 1u);
    EXPECT_EQ(c.mm, 0u);
    const auto rec = coincidence_records(c, {Basis::DA, Basis::RL});
    ASSERT_EQ(rec.size(), 4u);
    EXPECT_EQ(rec[1].setting.arm1.name, tomography::NamedState::D);
    EXPECT_EQ(rec[1].setting.arm2.name, tomography::NamedState::L);
    EXPECT_EQ(rec[1].counts, 1u);
}

TEST(Timetag, EntanglerStreamIsAntiCorrelatedInHV)
{
    SynthesisParams p;
    p.layout = Layout::entangler;
    p.g2 = 0;
    p.pulses = 400000;
    p.efficiency = 0.5;
    auto s = synthesize_stream(p, {Basis::HV, Basis::HV});
    s.set_t_zero(reference_from_pulse_histogram(s));
    const auto c = count_coincidences(s);
    ASSERT_GT(c.total(), 1000u);
    EXPECT_LT(double(c.pp + c.mm) / c.total(), 0.01);
}

TEST(Timetag, FilterSweepTrend)
{
    SynthesisParams p;
    p.pulses = 400000;
    p.efficiency = 0.5;
    p.seed = 2;
    const double T = double(Clock{p.rep_rate_hz, {}}.period_ps());
    const auto sweep = filter_sweep(p, {-45, 0, 35}, T - 45);
    ASSERT_EQ(sweep.points.size(), 3u);
    EXPECT_LE(sweep.points[2].coincidences, sweep.points[0].coincidences);
    EXPECT_GT(sweep.points[2].singlet_fraction, sweep.points[0].singlet_fraction);
}
