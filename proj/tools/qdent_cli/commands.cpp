#include "commands.hpp"

#include <qdent/errors.hpp>
#include <qdent/fock.hpp>
#include <qdent/tomography.hpp>
#include <qdent/twoqubit.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qdent::cli {

namespace {

struct Table {
    std::string name; // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

json envelope(const std::string& command, const ScenarioConfig& cfg)
{
    const json resolved = cfg.to_json();
    return {{"command", command}, {"config_hash", io::config_hash(resolved)}, {"config", resolved}};
}

std::string csv_text(const Table& t)
{
    std::string s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + io::format_double(r[i]);
        s += '\n';
    }
    return s;
}

json table_json(const Table& t)
{
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back(r);
    return {{"columns", t.columns}, {"rows", rows}};
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

// CSV tables get a sidecar with the resolved config; JSON output embeds it.
void emit_tables(Files& files, const std::string& command, const ScenarioConfig& cfg, const std::vector<Table>& tables,
                 Format fmt, json extra = json::object())
{
    json env = envelope(command, cfg);
    if (fmt == Format::csv) {
        for (const auto& t : tables) {
            files.emplace_back(t.name + ".csv", csv_text(t));
            json side = env;
            if (!extra.empty()) side["summary"] = extra;
            files.emplace_back(t.name + ".csv.meta.json", dump(side));
        }
        return;
    }
    for (const auto& t : tables) env[t.name] = table_json(t);
    if (!extra.empty()) env["summary"] = extra;
    files.emplace_back(command + ".json", dump(env));
}

std::vector<double> grid(double max, double step)
{
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor(max / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) g.push_back(static_cast<double>(i) * step);
    return g;
}

double setup_efficiency(const photostat::EfficiencyChain& c)
{
    const double sw = c.role_value("switch");
    const double bs = c.role_value("bs");
    return sw * sw * c.role_value("long") * c.role_value("short") * bs * bs;
}

timetag::TimeTagStream load_stream(const ScenarioConfig& cfg)
{
    const auto& t = cfg.timetag;
    if (!t.input.empty()) {
        std::ifstream in(t.input, std::ios::binary);
        if (!in) throw ConfigError("/timetag/input: cannot open " + t.input);
        return timetag::read_binary(in);
    }
    timetag::SynthesisParams p = t.synthesis;
    p.seed = cfg.seed;
    return timetag::synthesize_stream(p, t.bases);
}

void ensure_t_zero(timetag::TimeTagStream& s)
{
    if (!s.clock().t_zero_ps) s.set_t_zero(timetag::reference_from_pulse_histogram(s));
}

std::string flat_csv(const std::vector<std::pair<std::string, double>>& kv)
{
    std::string s = "quantity,value\n";
    for (const auto& [k, v] : kv) s += k + "," + io::format_double(v) + "\n";
    return s;
}

void emit_summary(Files& files, const std::string& command, const std::string& stem, const ScenarioConfig& cfg,
                  const json& result, const std::vector<std::pair<std::string, double>>& flat, Format fmt)
{
    json env = envelope(command, cfg);
    if (fmt == Format::csv) {
        files.emplace_back(stem + ".csv", flat_csv(flat));
        env["result"] = result;
        files.emplace_back(stem + ".csv.meta.json", dump(env));
    } else {
        env["result"] = result;
        files.emplace_back(stem + ".json", dump(env));
    }
}

} // namespace

Files cmd_entangle(const ScenarioConfig& cfg, std::optional<Format> fmt_in)
{
    const Format fmt = fmt_in.value_or(Format::json);
    const auto& s = cfg.source;
    Files files;

    const auto rho = wavepacket::weighted_source_state(s.indistinguishability, s.g2, s.eta);
    const auto sf = twoqubit::singlet_fraction(rho);

    // Fock-engine path: both pulses through the recombination beamsplitter,
    // distinguishable fraction as a relative phase flip on cV.
    const auto dist = photostat::qd_distribution_from_g2(s.g2);
    using fock::InputPort;
    using fock::OutputPort;
    using fock::Polarisation;
    const auto a = fock::emission_state(dist.probs(), fock::mode_index(InputPort::a, Polarisation::H));
    const auto b = fock::emission_state(dist.probs(), fock::mode_index(InputPort::b, Polarisation::V));
    const auto mixed = fock::apply_beamsplitter(fock::tensor(a, b), fock::BeamsplitterSpec::balanced());
    fock::FockMixture mix{{0.5 * (1 + s.indistinguishability), mixed},
                          {0.5 * (1 - s.indistinguishability),
                           fock::apply_phase(mixed, fock::mode_index(OutputPort::c, Polarisation::V), kPi)}};
    const auto ps = fock::post_select_coincidence(mix);
    const double fock_sf = ps.state ? twoqubit::singlet_fraction(*ps.state).value : 0.0;

    const double rep = s.rep_rate_hz * s.excitations_per_period;
    const auto fwd = photostat::forward_rate(cfg.rates.chain, rep);

    json result = {{"density_matrix", io::density_to_json(rho)},
                   {"singlet_fraction", sf.value},
                   {"fidelity_model", wavepacket::fidelity_vs_g2(s.indistinguishability, s.g2, s.eta)},
                   {"purity", rho.purity()},
                   {"fock_postselection", {{"probability", ps.probability}, {"singlet_fraction", fock_sf}}},
                   {"rates",
                    {{"attempt_rate_hz", rep / 2},
                     {"pair_rate_hz", fwd.rate},
                     {"pair_rate_sigma_hz", fwd.uncertainty}}}};
    std::vector<std::pair<std::string, double>> flat = {{"singlet_fraction", sf.value},
                                                        {"purity", rho.purity()},
                                                        {"fock_postselection_probability", ps.probability},
                                                        {"fock_singlet_fraction", fock_sf},
                                                        {"attempt_rate_hz", rep / 2},
                                                        {"pair_rate_hz", fwd.rate},
                                                        {"pair_rate_sigma_hz", fwd.uncertainty}};

    if (cfg.tomography.simulate) {
        const auto settings = tomography::standard_settings();
        const auto records = tomography::simulate_counts(rho, settings, cfg.tomography.total_pairs, cfg.seed);
        tomography::MleOptions opt;
        opt.random_starts = cfg.tomography.random_starts;
        opt.seed = cfg.seed;
        const auto rec = tomography::mle_reconstruct(records, opt);
        const double rec_sf = twoqubit::singlet_fraction(rec.state).value;
        json tomo = {{"density_matrix", io::density_to_json(rec.state)},
                     {"singlet_fraction", rec_sf},
                     {"fidelity_to_source", twoqubit::fidelity(rec.state, rho)},
                     {"log_likelihood", rec.log_likelihood}};
        flat.emplace_back("tomography_singlet_fraction", rec_sf);
        if (cfg.tomography.bootstrap > 0) {
            const double sd = tomography::bootstrap_uncertainty(records, cfg.tomography.bootstrap, cfg.seed + 1);
            tomo["singlet_fraction_sigma"] = sd;
            flat.emplace_back("tomography_singlet_fraction_sigma", sd);
        }
        result["tomography"] = tomo;
        std::ostringstream os;
        tomography::write_records_csv(os, records);
        files.emplace_back("tomography_counts.csv", os.str());
        json side = envelope("entangle", cfg);
        files.emplace_back("tomography_counts.csv.meta.json", dump(side));
    }

    if (fmt == Format::csv) {
        Table dm{"density_matrix", {"row", "col", "re", "im"}, {}};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                dm.rows.push_back({double(r), double(c), rho.matrix()(r, c).real(), rho.matrix()(r, c).imag()});
        files.emplace_back("density_matrix.csv", csv_text(dm));
        files.emplace_back("density_matrix.csv.meta.json", dump(envelope("entangle", cfg)));
    }
    emit_summary(files, "entangle", "entangle", cfg, result, flat, fmt);
    return files;
}

Files cmd_fig3(const ScenarioConfig& cfg, std::optional<Format> fmt_in)
{
    const auto& w = cfg.wavepacket;
    wavepacket::WavepacketParams p;
    p.T1_ps = w.T1_ps;
    p.pulse_width_ps = w.pulse_width_ps;
    p.I0 = wavepacket::calibrate_i0(w.fidelity_at_zero);
    p.validate();

    Table a{"fig3a", {"tau_ps", "overlap", "indistinguishability", "fidelity"}, {}};
    for (double tau : grid(w.tau_max_ps, w.tau_step_ps)) {
        const double o = wavepacket::temporal_overlap(tau, p, w.overlap);
        const double I = p.I0 * o;
        a.rows.push_back({tau, o, I, wavepacket::fidelity_from_indistinguishability(I)});
    }
    Table b{"fig3b", {"g2", "fidelity"}, {}};
    for (double g2 : grid(w.g2_max, w.g2_step)) b.rows.push_back({g2, wavepacket::fidelity_vs_g2(w.g2_I, g2, w.g2_eta)});

    Files files;
    emit_tables(files, "fig3", cfg, {a, b}, fmt_in.value_or(Format::csv), {{"I0", p.I0}});
    return files;
}

Files cmd_fig4b(const ScenarioConfig& cfg, std::optional<Format> fmt_in)
{
    timetag::SynthesisParams p = cfg.fig4b.synthesis;
    p.seed = cfg.seed;
    const double period = static_cast<double>(timetag::Clock{p.rep_rate_hz, {}}.period_ps());
    const double t_off = cfg.fig4b.t_off_ps.value_or(period - 45.0);
    const auto sweep = timetag::filter_sweep(p, cfg.fig4b.t_on_grid_ps, t_off);

    Table t{"fig4b", {"t_on_ps", "t_off_ps", "singlet_fraction", "coincidences", "coincidence_ratio"}, {}};
    for (const auto& pt : sweep.points)
        t.rows.push_back({pt.window.t_on_ps, pt.window.t_off_ps, pt.singlet_fraction, double(pt.coincidences),
                          sweep.unfiltered_coincidences
                              ? double(pt.coincidences) / double(sweep.unfiltered_coincidences)
                              : 0.0});
    Files files;
    emit_tables(files, "fig4b", cfg, {t}, fmt_in.value_or(Format::csv),
                {{"unfiltered_singlet_fraction", sweep.unfiltered_singlet_fraction},
                 {"unfiltered_coincidences", sweep.unfiltered_coincidences}});
    return files;
}

Files cmd_fig5(const ScenarioConfig& cfg, std::optional<Format> fmt_in)
{
    const auto rows = swap::sweep_loss(cfg.swap);
    Table t{"fig5", {"loss_db", "rate_qd", "rate_spdc"}, {}};
    for (int n : cfg.swap.mux_N) t.columns.push_back("rate_spdc_mux" + std::to_string(n));
    t.columns.insert(t.columns.end(), {"fidelity_qd", "fidelity_spdc", "p1_spdc"});
    for (int n : cfg.swap.mux_N) t.columns.push_back("p1_spdc_mux" + std::to_string(n));
    for (const auto& r : rows) {
        std::vector<double> v = {r.loss_db, r.rate_qd, r.rate_spdc};
        v.insert(v.end(), r.rate_mux.begin(), r.rate_mux.end());
        v.insert(v.end(), {r.fidelity_qd, r.fidelity_spdc, r.p1_spdc});
        v.insert(v.end(), r.p1_mux.begin(), r.p1_mux.end());
        t.rows.push_back(std::move(v));
    }
    Files files;
    emit_tables(files, "fig5", cfg, {t}, fmt_in.value_or(Format::csv));
    return files;
}

Files cmd_rates(const ScenarioConfig& cfg, std::optional<Format> fmt_in)
{
    const auto& r = cfg.rates;
    const double rep = cfg.source.rep_rate_hz * cfg.source.excitations_per_period;
    const auto fwd = photostat::forward_rate(r.chain, rep);
    const auto back = photostat::back_propagate_rate(r.measured_rate_hz, r.post_bs_chain, r.measured_sigma_hz);
    const double setup = setup_efficiency(r.chain);

    json scaling = json::array();
    std::vector<std::pair<std::string, double>> flat = {{"forward_rate_hz", fwd.rate},
                                                        {"forward_sigma_hz", fwd.uncertainty},
                                                        {"back_propagated_rate_hz", back.rate},
                                                        {"back_propagated_sigma_hz", back.uncertainty},
                                                        {"setup_efficiency", setup}};
    for (double eta : r.scaling_eta) {
        swap::SwapScenario s;
        s.rep_rate_hz = r.scaling_rep_rate_hz;
        s.eta_s = eta;
        s.setup_eta = setup;
        const double rate = swap::pair_rate(s);
        scaling.push_back({{"eta", eta}, {"rep_rate_hz", r.scaling_rep_rate_hz}, {"pair_rate_hz", rate}});
        flat.emplace_back("pair_rate_hz_eta_" + io::format_double(eta), rate);
    }
    json result = {{"forward", {{"rate_hz", fwd.rate}, {"sigma_hz", fwd.uncertainty}, {"rep_rate_hz", rep}}},
                   {"back_propagated",
                    {{"rate_hz", back.rate}, {"sigma_hz", back.uncertainty}, {"measured_rate_hz", r.measured_rate_hz}}},
                   {"setup_efficiency", setup},
                   {"scaling", scaling}};
    Files files;
    emit_summary(files, "rates", "rates", cfg, result, flat, fmt_in.value_or(Format::json));
    return files;
}

Files cmd_timetag(const ScenarioConfig& cfg, const std::string& sub, std::optional<Format> fmt_in)
{
    const auto& t = cfg.timetag;
    Files files;
    const std::string command = "timetag " + sub;
    timetag::TimeTagStream s = load_stream(cfg);
    const std::int64_t period = s.clock().period_ps();
    const std::int64_t span = t.span_ps > 0 ? t.span_ps : 12 * period;

    if (sub == "synth") {
        std::ostringstream os;
        timetag::write_binary(os, s);
        files.emplace_back("stream.qdtt", os.str());
        json env = envelope(command, cfg);
        json counts = json::object();
        for (std::uint16_t ch = 0; ch <= 4; ++ch)
            if (auto n = s.count(ch)) counts[std::to_string(ch)] = n;
        env["result"] = {{"records", s.size()}, {"period_ps", period}, {"channel_counts", counts}};
        files.emplace_back("stream.qdtt.meta.json", dump(env));
        return files;
    }
    if (sub == "hist") {
        const auto h = timetag::coincidence_histogram(s, t.channel_a, t.channel_b, t.bin_ps, span);
        Table tab{"histogram", {"bin_start_ps", "count"}, {}};
        for (std::size_t i = 0; i < h.counts.size(); ++i) tab.rows.push_back({double(h.bin_start(i)), double(h.counts[i])});
        emit_tables(files, "histogram", cfg, {tab}, fmt_in.value_or(Format::csv));
        return files;
    }
    if (sub == "g2") {
        const auto h = timetag::coincidence_histogram(s, t.channel_a, t.channel_b, t.bin_ps, span);
        const auto g = timetag::g2_from_histogram(h, period);
        json result = {{"g2", g.g2},
                       {"stat_err", g.stat_err},
                       {"central_area", g.central_area},
                       {"mean_side_area", g.mean_side_area},
                       {"side_peaks", g.side_peaks}};
        emit_summary(files, command, "g2", cfg, result,
                     {{"g2", g.g2}, {"stat_err", g.stat_err}, {"central_area", g.central_area},
                      {"mean_side_area", g.mean_side_area}, {"side_peaks", double(g.side_peaks)}},
                     fmt_in.value_or(Format::json));
        return files;
    }
    if (sub == "filter") {
        ensure_t_zero(s);
        const timetag::FilterWindow w{t.t_on_ps, t.t_off_ps.value_or(double(period) - 45.0)};
        const auto f = timetag::apply_temporal_filter(s, w);
        std::ostringstream os;
        timetag::write_binary(os, f);
        files.emplace_back("filtered.qdtt", os.str());
        json env = envelope(command, cfg);
        env["result"] = {{"t_zero_ps", *f.clock().t_zero_ps},
                         {"t_on_ps", w.t_on_ps},
                         {"t_off_ps", w.t_off_ps},
                         {"records_in", s.size()},
                         {"records_out", f.size()}};
        files.emplace_back("filtered.qdtt.meta.json", dump(env));
        return files;
    }
    if (sub == "jitter") {
        const auto h = timetag::phase_histogram(s, t.channel_a, t.bin_ps);
        const auto j = timetag::fit_jitter(h);
        emit_summary(files, command, "jitter", cfg,
                     {{"fwhm_ps", j.fwhm_ps}, {"fit_error_ps", j.fit_error}, {"centre_ps", j.centre_ps}},
                     {{"fwhm_ps", j.fwhm_ps}, {"fit_error_ps", j.fit_error}, {"centre_ps", j.centre_ps}},
                     fmt_in.value_or(Format::json));
        return files;
    }
    if (sub == "reference") {
        const auto ref = timetag::reference_from_pulse_histogram(s);
        emit_summary(files, command, "reference", cfg, {{"t_zero_ps", ref}, {"period_ps", period}},
                     {{"t_zero_ps", double(ref)}, {"period_ps", double(period)}}, fmt_in.value_or(Format::json));
        return files;
    }
    throw ConfigError("unknown timetag subcommand \"" + sub + "\"");
}

void write_files(const std::string& out_dir, const Files& files)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir + ": " + ec.message());
    for (const auto& [name, bytes] : files) {
        const fs::path p = fs::path(out_dir) / name;
        std::ofstream os(p, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw Error("failed to write " + p.string());
    }
}

int run(int argc, char** argv)
{
    CLI::App app{"qdent: post-selected quantum-dot entanglement toolkit"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", format;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON scenario config")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    std::string which;
    for (const char* name : {"entangle", "fig3", "fig4b", "fig5", "rates"})
        app.add_subcommand(name, std::string("run ") + name)->callback([&which, name] { which = name; });
    auto* tt = app.add_subcommand("timetag", "time-tag synthesis and analysis");
    tt->fallthrough();
    tt->require_subcommand(1);
    std::string tt_sub;
    for (const char* name : {"synth", "hist", "g2", "filter", "jitter", "reference"})
        tt->add_subcommand(name)->callback([&which, &tt_sub, name] {
            which = "timetag";
            tt_sub = name;
        });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ScenarioConfig cfg = config_path.empty() ? ScenarioConfig::from_json(json::object()) : load_config(config_path);
        if (seed) cfg.seed = *seed;
        std::optional<Format> fmt;
        if (!format.empty()) fmt = format == "json" ? Format::json : Format::csv;

        Files files;
        if (which == "entangle") files = cmd_entangle(cfg, fmt);
        else if (which == "fig3") files = cmd_fig3(cfg, fmt);
        else if (which == "fig4b") files = cmd_fig4b(cfg, fmt);
        else if (which == "fig5") files = cmd_fig5(cfg, fmt);
        else if (which == "rates") files = cmd_rates(cfg, fmt);
        else files = cmd_timetag(cfg, tt_sub, fmt);
        write_files(out_dir, files);
        for (const auto& f : files) std::cout << (std::filesystem::path(out_dir) / f.first).string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const ReconstructionError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const ModelDomainError& e) {
        std::cerr << "model-domain error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace qdent::cli
