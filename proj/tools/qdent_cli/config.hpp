#pragma once

#include <qdent/photostat.hpp>
#include <qdent/serialization.hpp>
#include <qdent/swap.hpp>
#include <qdent/timetag.hpp>
#include <qdent/wavepacket.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qdent::cli {

using json = io::json;

struct SourceConfig {
    double g2 = 0.015;
    double indistinguishability = 0.981; // from V_HOM
    double eta = 0.05;                   // per-photon efficiency in the weighted-state model
    int excitations_per_period = 1;
    double rep_rate_hz = 76.3e6;
};

struct WavepacketConfig {
    double T1_ps = 60.0;
    double pulse_width_ps = 5.0;
    double fidelity_at_zero = 0.958;
    wavepacket::OverlapConvention overlap = wavepacket::OverlapConvention::squared_amplitude;
    double tau_max_ps = 120.0;
    double tau_step_ps = 5.0;
    double g2_I = 0.968;
    double g2_eta = 0.05;
    double g2_max = 0.08;
    double g2_step = 0.005;
};

struct TomographyConfig {
    bool simulate = false;
    std::uint64_t total_pairs = 1000000;
    int random_starts = 4;
    int bootstrap = 0;
};

struct TimetagConfig {
    timetag::SynthesisParams synthesis; // seed comes from the top level
    timetag::BasisPair bases;
    std::string input; // binary stream; synthesised when empty
    std::uint16_t channel_a = timetag::channel::d1;
    std::uint16_t channel_b = timetag::channel::d2;
    std::int64_t bin_ps = 10;
    std::int64_t span_ps = 0; // 0: twelve periods
    double t_on_ps = 20.0;
    std::optional<double> t_off_ps; // default period - 45 ps
};

struct Fig4bConfig {
    timetag::SynthesisParams synthesis;
    std::vector<double> t_on_grid_ps = {-45, -20, 0, 20, 35};
    std::optional<double> t_off_ps;

    Fig4bConfig();
};

struct RatesConfig {
    photostat::EfficiencyChain chain = photostat::EfficiencyChain::table_s1();
    photostat::EfficiencyChain post_bs_chain = photostat::EfficiencyChain::table_s1_post_bs();
    double measured_rate_hz = 320e3;
    double measured_sigma_hz = 0.0;
    std::vector<double> scaling_eta = {0.49, 0.57, 0.712};
    double scaling_rep_rate_hz = 2e9;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    SourceConfig source;
    WavepacketConfig wavepacket;
    TomographyConfig tomography;
    TimetagConfig timetag;
    Fig4bConfig fig4b;
    RatesConfig rates;
    swap::SweepConfig swap;

    /// Defaults overridden by `j`; unknown keys and wrong types throw ConfigError
    /// naming the offending key path.
    static ScenarioConfig from_json(const json& j);
    json to_json() const;
};

/// Parses JSON text; syntax errors report line and column.
json parse_config_text(const std::string& text, const std::string& origin = "config");
ScenarioConfig load_config(const std::string& path);

} // namespace qdent::cli
