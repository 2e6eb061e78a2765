#include "config.hpp"

#include <qdent/errors.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qdent::cli {

namespace {

// Reads one JSON object against a fixed key set. Every access is recorded so
// finish() can reject whatever is left over.
class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    Block sub(const std::string& key)
    {
        seen_.insert(key);
        static const json empty = json::object();
        return Block(j_.contains(key) ? j_.at(key) : empty, path_ + "/" + key);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void get(const std::string& key, double& out) { visit(key, [&](const json& v) {
        if (!v.is_number()) fail(key, "expected a number");
        out = v.get<double>();
    }); }

    void get(const std::string& key, bool& out) { visit(key, [&](const json& v) {
        if (!v.is_boolean()) fail(key, "expected true or false");
        out = v.get<bool>();
    }); }

    void get(const std::string& key, std::string& out) { visit(key, [&](const json& v) {
        if (!v.is_string()) fail(key, "expected a string");
        out = v.get<std::string>();
    }); }

    template <class Int>
        requires std::is_integral_v<Int>
    void get(const std::string& key, Int& out)
    {
        visit(key, [&](const json& v) {
            if (!v.is_number_integer()) fail(key, "expected an integer");
            if (v.is_number_unsigned()) {
                const auto u = v.get<std::uint64_t>();
                if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) fail(key, "integer out of range");
                out = static_cast<Int>(u);
            } else {
                const auto s = v.get<std::int64_t>();
                if (s < static_cast<std::int64_t>(std::numeric_limits<Int>::min())
                    || (s > 0 && static_cast<std::uint64_t>(s) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())))
                    fail(key, "integer out of range");
                out = static_cast<Int>(s);
            }
        });
    }

    void get(const std::string& key, std::optional<double>& out) { visit(key, [&](const json& v) {
        if (v.is_null()) { out.reset(); return; }
        if (!v.is_number()) fail(key, "expected a number or null");
        out = v.get<double>();
    }); }

    template <class T>
    void get(const std::string& key, std::vector<T>& out)
    {
        visit(key, [&](const json& v) {
            if (!v.is_array()) fail(key, "expected an array");
            std::vector<T> tmp;
            for (std::size_t i = 0; i < v.size(); ++i) {
                json wrap = json::object();
                wrap["v"] = v[i];
                T x{};
                Block(wrap, path_ + "/" + key + "/" + std::to_string(i)).get_plain("v", x);
                tmp.push_back(x);
            }
            out = std::move(tmp);
        });
    }

    template <class E>
    void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names)
    {
        visit(key, [&](const json& v) {
            if (!v.is_string()) fail(key, "expected a string");
            const auto s = v.get<std::string>();
            for (const auto& [n, e] : names)
                if (s == n) { out = e; return; }
            std::string allowed;
            for (const auto& [n, e] : names) allowed += std::string(allowed.empty() ? "" : ", ") + n;
            fail(key, "unknown value \"" + s + "\" (allowed: " + allowed + ")");
        });
    }

    photostat::EfficiencyChain chain(const std::string& key, photostat::EfficiencyChain fallback)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& arr = j_.at(key);
        if (!arr.is_array()) fail(key, "expected an array of efficiency entries");
        photostat::EfficiencyChain out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Block b(arr[i], path_ + "/" + key + "/" + std::to_string(i));
            photostat::Efficiency e;
            if (!b.has("role") || !b.has("value")) throw ConfigError(b.where() + ": entries need role and value");
            b.get("role", e.role);
            b.get("label", e.label);
            b.get("value", e.value);
            b.get("sigma", e.sigma);
            b.finish();
            if (!(e.value >= 0 && e.value <= 1)) throw ConfigError(b.where() + "/value: must lie in [0, 1]");
            if (!(e.sigma >= 0)) throw ConfigError(b.where() + "/sigma: must be non-negative");
            out.add(e);
        }
        return out;
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(path_ + "/" + k + ": unknown key");
    }

    std::string where() const { return path_.empty() ? "/" : path_; }

private:
    template <class F>
    void visit(const std::string& key, F&& f)
    {
        seen_.insert(key);
        if (j_.contains(key)) f(j_.at(key));
    }

    template <class T>
    void get_plain(const std::string& key, T& out) { get(key, out); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        throw ConfigError(path_ + "/" + key + ": " + msg);
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const std::initializer_list<std::pair<const char*, timetag::Layout>> kLayouts = {
    {"hbt", timetag::Layout::hbt}, {"entangler", timetag::Layout::entangler}};
const std::initializer_list<std::pair<const char*, timetag::Emission>> kEmissions = {
    {"quantum_dot", timetag::Emission::quantum_dot}, {"poissonian", timetag::Emission::poissonian}};
const std::initializer_list<std::pair<const char*, timetag::Basis>> kBases = {
    {"HV", timetag::Basis::HV}, {"DA", timetag::Basis::DA}, {"RL", timetag::Basis::RL}};
const std::initializer_list<std::pair<const char*, photostat::PairStatistics>> kStats = {
    {"thermal", photostat::PairStatistics::thermal}, {"poissonian", photostat::PairStatistics::poissonian}};
const std::initializer_list<std::pair<const char*, wavepacket::OverlapConvention>> kOverlaps = {
    {"squared", wavepacket::OverlapConvention::squared_amplitude},
    {"amplitude", wavepacket::OverlapConvention::amplitude}};

template <class E>
std::string name_of(E e, std::initializer_list<std::pair<const char*, E>> names)
{
    for (const auto& [n, v] : names)
        if (v == e) return n;
    return "?";
}

void read_synthesis(Block b, timetag::SynthesisParams& p)
{
    b.get_enum("layout", p.layout, kLayouts);
    b.get_enum("emission", p.emission, kEmissions);
    b.get("g2", p.g2);
    b.get("mean_photons", p.mean_photons);
    b.get("T1_ps", p.T1_ps);
    b.get("pulse_width_ps", p.pulse_width_ps);
    b.get("rep_rate_hz", p.rep_rate_hz);
    b.get("pulses", p.pulses);
    b.get("efficiency", p.efficiency);
    b.get("jitter_fwhm_ps", p.jitter_fwhm_ps);
    b.get("noise_rejection_prob", p.noise_rejection_prob);
    b.get("noise_window_ps", p.noise_window_ps);
    b.get("indistinguishability", p.indistinguishability);
    b.get("pulse_offset_ps", p.pulse_offset_ps);
    b.get("emit_laser", p.emit_laser);
    b.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(b.where() + ": " + e.what());
    }
}

json synthesis_json(const timetag::SynthesisParams& p)
{
    return {{"layout", name_of(p.layout, kLayouts)},
            {"emission", name_of(p.emission, kEmissions)},
            {"g2", p.g2},
            {"mean_photons", p.mean_photons},
            {"T1_ps", p.T1_ps},
            {"pulse_width_ps", p.pulse_width_ps},
            {"rep_rate_hz", p.rep_rate_hz},
            {"pulses", p.pulses},
            {"efficiency", p.efficiency},
            {"jitter_fwhm_ps", p.jitter_fwhm_ps},
            {"noise_rejection_prob", p.noise_rejection_prob},
            {"noise_window_ps", p.noise_window_ps},
            {"indistinguishability", p.indistinguishability},
            {"pulse_offset_ps", p.pulse_offset_ps},
            {"emit_laser", p.emit_laser}};
}

void read_scenario(Block b, swap::SwapScenario& s)
{
    b.get("rep_rate_hz", s.rep_rate_hz);
    b.get("eta_s", s.eta_s);
    b.get("eta_det", s.eta_det);
    b.get("pnr", s.pnr);
    if (s.is_spdc()) {
        b.get("switch_eta", s.switch_eta);
        b.get("insertion_eta", s.insertion_eta);
        b.get("fidelity_floor", s.fidelity_floor);
        b.get("p1", s.spdc_p1);
        b.get_enum("statistics", s.spdc_statistics, kStats);
        b.get("max_pairs", s.spdc_max_pairs);
    } else {
        b.get("g2", s.qd_g2);
        b.get("indistinguishability", s.qd_I);
        b.get("setup_eta", s.setup_eta);
    }
    b.finish();
    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(b.where() + ": " + e.what());
    }
}

json scenario_json(const swap::SwapScenario& s)
{
    json j = {{"rep_rate_hz", s.rep_rate_hz}, {"eta_s", s.eta_s}, {"eta_det", s.eta_det}, {"pnr", s.pnr}};
    if (s.is_spdc()) {
        j["switch_eta"] = s.switch_eta;
        j["insertion_eta"] = s.insertion_eta;
        j["fidelity_floor"] = s.fidelity_floor ? json(*s.fidelity_floor) : json(nullptr);
        j["p1"] = s.spdc_p1;
        j["statistics"] = name_of(s.spdc_statistics, kStats);
        j["max_pairs"] = s.spdc_max_pairs;
    } else {
        j["g2"] = s.qd_g2;
        j["indistinguishability"] = s.qd_I;
        j["setup_eta"] = s.setup_eta;
    }
    return j;
}

json chain_json(const photostat::EfficiencyChain& c)
{
    json arr = json::array();
    for (const auto& e : c.entries())
        arr.push_back({{"role", e.role}, {"label", e.label}, {"value", e.value}, {"sigma", e.sigma}});
    return arr;
}

void require(bool ok, const std::string& path, const std::string& msg)
{
    if (!ok) throw ConfigError(path + ": " + msg);
}

} // namespace

Fig4bConfig::Fig4bConfig()
{
    synthesis.layout = timetag::Layout::entangler;
    synthesis.pulses = 2000000;
    synthesis.indistinguishability = 0.968;
}

ScenarioConfig ScenarioConfig::from_json(const json& j)
{
    ScenarioConfig c;
    Block root(j, "");
    root.get("seed", c.seed);

    {
        Block b = root.sub("source");
        auto& s = c.source;
        b.get("g2", s.g2);
        b.get("indistinguishability", s.indistinguishability);
        b.get("eta", s.eta);
        b.get("excitations_per_period", s.excitations_per_period);
        b.get("rep_rate_hz", s.rep_rate_hz);
        b.finish();
        require(s.g2 >= 0 && s.g2 < 0.5, "/source/g2", "must lie in [0, 0.5)");
        require(s.indistinguishability >= 0 && s.indistinguishability <= 1, "/source/indistinguishability",
                "must lie in [0, 1]");
        require(s.eta > 0 && s.eta <= 1, "/source/eta", "must lie in (0, 1]");
        require(s.excitations_per_period == 1 || s.excitations_per_period == 2, "/source/excitations_per_period",
                "must be 1 or 2");
        require(s.rep_rate_hz > 0, "/source/rep_rate_hz", "must be positive");
    }
    {
        Block b = root.sub("wavepacket");
        auto& w = c.wavepacket;
        b.get("T1_ps", w.T1_ps);
        b.get("pulse_width_ps", w.pulse_width_ps);
        b.get("fidelity_at_zero", w.fidelity_at_zero);
        b.get_enum("overlap", w.overlap, kOverlaps);
        b.get("tau_max_ps", w.tau_max_ps);
        b.get("tau_step_ps", w.tau_step_ps);
        b.get("g2_I", w.g2_I);
        b.get("g2_eta", w.g2_eta);
        b.get("g2_max", w.g2_max);
        b.get("g2_step", w.g2_step);
        b.finish();
        require(w.T1_ps > 0 && w.pulse_width_ps > 0, "/wavepacket", "T1_ps and pulse_width_ps must be positive");
        require(w.fidelity_at_zero >= 0.5 && w.fidelity_at_zero <= 1, "/wavepacket/fidelity_at_zero",
                "must lie in [0.5, 1]");
        require(w.tau_step_ps > 0 && w.tau_max_ps >= 0, "/wavepacket", "tau grid must be non-empty");
        require(w.g2_step > 0 && w.g2_max >= 0 && w.g2_max < 0.5, "/wavepacket", "g2 grid must lie in [0, 0.5)");
    }
    {
        Block b = root.sub("tomography");
        auto& t = c.tomography;
        b.get("simulate", t.simulate);
        b.get("total_pairs", t.total_pairs);
        b.get("random_starts", t.random_starts);
        b.get("bootstrap", t.bootstrap);
        b.finish();
        require(t.total_pairs > 0, "/tomography/total_pairs", "must be positive");
        require(t.random_starts >= 0, "/tomography/random_starts", "must be non-negative");
        require(t.bootstrap == 0 || t.bootstrap >= 50, "/tomography/bootstrap", "0 or at least 50 resamples");
    }
    {
        Block b = root.sub("timetag");
        auto& t = c.timetag;
        read_synthesis(b.sub("synthesis"), t.synthesis);
        {
            Block bb = b.sub("bases");
            bb.get_enum("c", t.bases.c, kBases);
            bb.get_enum("d", t.bases.d, kBases);
            bb.finish();
        }
        b.get("input", t.input);
        b.get("channel_a", t.channel_a);
        b.get("channel_b", t.channel_b);
        b.get("bin_ps", t.bin_ps);
        b.get("span_ps", t.span_ps);
        b.get("t_on_ps", t.t_on_ps);
        b.get("t_off_ps", t.t_off_ps);
        b.finish();
        require(t.bin_ps > 0, "/timetag/bin_ps", "must be positive");
        require(t.span_ps >= 0, "/timetag/span_ps", "must be non-negative");
    }
    {
        Block b = root.sub("fig4b");
        auto& f = c.fig4b;
        read_synthesis(b.sub("synthesis"), f.synthesis);
        b.get("t_on_grid_ps", f.t_on_grid_ps);
        b.get("t_off_ps", f.t_off_ps);
        b.finish();
        require(!f.t_on_grid_ps.empty(), "/fig4b/t_on_grid_ps", "must not be empty");
    }
    {
        Block b = root.sub("rates");
        auto& r = c.rates;
        r.chain = b.chain("chain", r.chain);
        r.post_bs_chain = b.chain("post_bs_chain", r.post_bs_chain);
        b.get("measured_rate_hz", r.measured_rate_hz);
        b.get("measured_sigma_hz", r.measured_sigma_hz);
        b.get("scaling_eta", r.scaling_eta);
        b.get("scaling_rep_rate_hz", r.scaling_rep_rate_hz);
        b.finish();
        for (const auto& role : photostat::kForwardRoles)
            require(r.chain.contains(role), "/rates/chain", "missing role \"" + role + "\"");
        require(r.measured_rate_hz >= 0 && r.measured_sigma_hz >= 0, "/rates", "measured rate must be non-negative");
        require(r.scaling_rep_rate_hz > 0, "/rates/scaling_rep_rate_hz", "must be positive");
        for (double e : r.scaling_eta) require(e >= 0 && e <= 1, "/rates/scaling_eta", "entries must lie in [0, 1]");
    }
    {
        Block b = root.sub("swap");
        auto& s = c.swap;
        read_scenario(b.sub("qd"), s.qd);
        read_scenario(b.sub("spdc"), s.spdc);
        b.get("mux_N", s.mux_N);
        b.get("loss_grid_db", s.loss_grid_db);
        b.finish();
        for (int n : s.mux_N) require(n >= 1, "/swap/mux_N", "entries must be at least 1");
        require(!s.loss_grid_db.empty(), "/swap/loss_grid_db", "must not be empty");
        for (double l : s.loss_grid_db) require(l >= 0, "/swap/loss_grid_db", "entries must be non-negative");
        require(s.qd.rep_rate_hz == s.spdc.rep_rate_hz, "/swap", "qd and spdc must share rep_rate_hz");
    }
    root.finish();
    return c;
}

json ScenarioConfig::to_json() const
{
    json j;
    j["seed"] = seed;
    j["source"] = {{"g2", source.g2},
                   {"indistinguishability", source.indistinguishability},
                   {"eta", source.eta},
                   {"excitations_per_period", source.excitations_per_period},
                   {"rep_rate_hz", source.rep_rate_hz}};
    j["wavepacket"] = {{"T1_ps", wavepacket.T1_ps},
                       {"pulse_width_ps", wavepacket.pulse_width_ps},
                       {"fidelity_at_zero", wavepacket.fidelity_at_zero},
                       {"overlap", name_of(wavepacket.overlap, kOverlaps)},
                       {"tau_max_ps", wavepacket.tau_max_ps},
                       {"tau_step_ps", wavepacket.tau_step_ps},
                       {"g2_I", wavepacket.g2_I},
                       {"g2_eta", wavepacket.g2_eta},
                       {"g2_max", wavepacket.g2_max},
                       {"g2_step", wavepacket.g2_step}};
    j["tomography"] = {{"simulate", tomography.simulate},
                       {"total_pairs", tomography.total_pairs},
                       {"random_starts", tomography.random_starts},
                       {"bootstrap", tomography.bootstrap}};
    j["timetag"] = {{"synthesis", synthesis_json(timetag.synthesis)},
                    {"bases", {{"c", name_of(timetag.bases.c, kBases)}, {"d", name_of(timetag.bases.d, kBases)}}},
                    {"input", timetag.input},
                    {"channel_a", timetag.channel_a},
                    {"channel_b", timetag.channel_b},
                    {"bin_ps", timetag.bin_ps},
                    {"span_ps", timetag.span_ps},
                    {"t_on_ps", timetag.t_on_ps},
                    {"t_off_ps", timetag.t_off_ps ? json(*timetag.t_off_ps) : json(nullptr)}};
    j["fig4b"] = {{"synthesis", synthesis_json(fig4b.synthesis)},
                  {"t_on_grid_ps", fig4b.t_on_grid_ps},
                  {"t_off_ps", fig4b.t_off_ps ? json(*fig4b.t_off_ps) : json(nullptr)}};
    j["rates"] = {{"chain", chain_json(rates.chain)},
                  {"post_bs_chain", chain_json(rates.post_bs_chain)},
                  {"measured_rate_hz", rates.measured_rate_hz},
                  {"measured_sigma_hz", rates.measured_sigma_hz},
                  {"scaling_eta", rates.scaling_eta},
                  {"scaling_rep_rate_hz", rates.scaling_rep_rate_hz}};
    j["swap"] = {{"qd", scenario_json(swap.qd)},
                 {"spdc", scenario_json(swap.spdc)},
                 {"mux_N", swap.mux_N},
                 {"loss_grid_db", swap.loss_grid_db}};
    return j;
}

json parse_config_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << col << ": JSON syntax error";
        const std::string what = e.what();
        const auto pos = what.find("syntax error");
        if (pos != std::string::npos) msg << what.substr(pos + 12);
        throw ConfigError(msg.str());
    }
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return ScenarioConfig::from_json(parse_config_text(ss.str(), path));
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind(path, 0) == 0) throw;
        throw ConfigError(path + ": " + what);
    }
}

} // namespace qdent::cli
