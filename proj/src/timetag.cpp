#include <qdent/timetag.hpp>

#include <qdent/errors.hpp>
#include <qdent/fock.hpp>
#include <qdent/optim.hpp>
#include <qdent/photostat.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace qdent::timetag {

std::int64_t Clock::period_ps() const
{
    return std::llround(1e12 / rep_rate_hz);
}

TimeTagStream::TimeTagStream(std::vector<TimeTag> records, Clock clock)
    : records_(std::move(records)), clock_(clock)
{
    if (!(clock_.rep_rate_hz > 0)) throw ContractError("repetition rate must be positive");
    for (std::size_t i = 1; i < records_.size(); ++i)
        if (records_[i].time_ps < records_[i - 1].time_ps) {
            std::ostringstream msg;
            msg << "time tags are not ordered at record " << i;
            throw ContractError(msg.str());
        }
}

std::vector<std::int64_t> TimeTagStream::channel_times(std::uint16_t ch) const
{
    std::vector<std::int64_t> out;
    for (const auto& r : records_)
        if (r.channel == ch) out.push_back(r.time_ps);
    return out;
}

std::size_t TimeTagStream::count(std::uint16_t ch) const
{
    return std::count_if(records_.begin(), records_.end(), [ch](const TimeTag& r) { return r.channel == ch; });
}

namespace {

constexpr char kMagic[8] = {'Q', 'D', 'T', 'T', 'A', 'G', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T value)
{
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    os.write(buf, sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    using U = std::make_unsigned_t<T>;
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ContractError("truncated time-tag stream");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
    return static_cast<T>(u);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b)
{
    return a - floor_div(a, b) * b;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

void write_binary(std::ostream& os, const TimeTagStream& s)
{
    os.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(os, kVersion);
    put_le<std::uint32_t>(os, 0);
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(std::llround(s.clock().rep_rate_hz * 1000.0)));
    put_le<std::int64_t>(os, s.clock().t_zero_ps.value_or(std::numeric_limits<std::int64_t>::min()));
    for (const auto& r : s.records()) {
        put_le<std::uint16_t>(os, r.channel);
        put_le<std::int64_t>(os, r.time_ps);
    }
    if (!os) throw Error("failed to write time-tag stream");
}

TimeTagStream read_binary(std::istream& is)
{
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ContractError("not a time-tag stream (bad magic)");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kVersion) throw ContractError("unsupported time-tag stream version " + std::to_string(version));
    get_le<std::uint32_t>(is);
    Clock clock;
    clock.rep_rate_hz = static_cast<double>(get_le<std::uint64_t>(is)) / 1000.0;
    const auto t0 = get_le<std::int64_t>(is);
    if (t0 != std::numeric_limits<std::int64_t>::min()) clock.t_zero_ps = t0;
    std::vector<TimeTag> records;
    while (is.peek() != std::char_traits<char>::eof()) {
        TimeTag r;
        r.channel = get_le<std::uint16_t>(is);
        r.time_ps = get_le<std::int64_t>(is);
        records.push_back(r);
    }
    return TimeTagStream(std::move(records), clock);
}

void SynthesisParams::validate() const
{
    auto prob = [](double x, const char* what) {
        if (!(x >= 0 && x <= 1)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
    };
    prob(efficiency, "efficiency");
    prob(noise_rejection_prob, "noise rejection probability");
    prob(indistinguishability, "indistinguishability");
    if (!(g2 >= 0 && g2 < 0.5)) throw ParameterError("g2 must lie in [0, 0.5)");
    if (!(mean_photons >= 0)) throw ParameterError("mean photon number must be non-negative");
    if (!(T1_ps > 0 && pulse_width_ps > 0)) throw ParameterError("T1 and pulse width must be positive");
    if (!(rep_rate_hz > 0)) throw ParameterError("repetition rate must be positive");
    if (!(jitter_fwhm_ps >= 0 && noise_window_ps >= 0)) throw ParameterError("jitter and noise window must be non-negative");
    if (pulses == 0) throw ParameterError("pulse count must be positive");
}

std::vector<BasisPair> all_basis_pairs()
{
    std::vector<BasisPair> out;
    for (Basis c : {Basis::HV, Basis::DA, Basis::RL})
        for (Basis d : {Basis::HV, Basis::DA, Basis::RL}) out.push_back({c, d});
    return out;
}

tomography::NamedState plus_state(Basis b)
{
    using tomography::NamedState;
    return b == Basis::HV ? NamedState::H : b == Basis::DA ? NamedState::D : NamedState::R;
}

tomography::NamedState minus_state(Basis b)
{
    using tomography::NamedState;
    return b == Basis::HV ? NamedState::V : b == Basis::DA ? NamedState::A : NamedState::L;
}

namespace {

// Rows <e+| and <e-| of the analysis basis.
Matrix2c<double> analysis_matrix(Basis b)
{
    Matrix2c<double> u;
    u.row(0) = tomography::named_ket(plus_state(b)).adjoint();
    u.row(1) = tomography::named_ket(minus_state(b)).adjoint();
    return u;
}

struct Pattern {
    std::array<std::uint8_t, 4> occupation; // (c+, c-, d+, d-)
    double cumulative;
};

// Output patterns of two interfering photons H (long arm, port a) and V
// (short arm, port b) after the balanced beamsplitter and analysis.
std::vector<Pattern> interference_patterns(const BasisPair& bases)
{
    using namespace fock;
    Occupation in{};
    in[mode_index(InputPort::a, Polarisation::H)] = 1;
    in[mode_index(InputPort::b, Polarisation::V)] = 1;
    FockState s = apply_beamsplitter(FockState::basis(in), BeamsplitterSpec::balanced());
    s = apply_two_mode(s, mode_index(OutputPort::c, Polarisation::H), mode_index(OutputPort::c, Polarisation::V),
                       analysis_matrix(bases.c));
    s = apply_two_mode(s, mode_index(OutputPort::d, Polarisation::H), mode_index(OutputPort::d, Polarisation::V),
                       analysis_matrix(bases.d));
    std::vector<Pattern> out;
    double acc = 0.0;
    for (const auto& [occ, p] : number_distribution(s)) {
        acc += p;
        out.push_back({occ, acc});
    }
    return out;
}

struct Photon {
    double delay_ps;
    int pol; // 0 = H, 1 = V
};

class Synth {
public:
    explicit Synth(const SynthesisParams& p)
        : p_(p), rng_(p.seed), sigma_j_(p.jitter_fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0)))),
          expo_(1.0 / p.T1_ps)
    {
        if (p.emission == Emission::quantum_dot) dist_ = photostat::qd_distribution_from_g2(p.g2);
    }

    double uniform() { return unif_(rng_); }
    bool bernoulli(double q) { return unif_(rng_) < q; }
    double jitter() { return sigma_j_ > 0 ? sigma_j_ * normal_(rng_) : 0.0; }
    double dot_delay() { return p_.pulse_width_ps * normal_(rng_) + expo_(rng_); }

    // Photons emitted in one pulse that survive the loss chain.
    void emit(int pol, std::vector<Photon>& primary, std::vector<Photon>& noise)
    {
        primary.clear();
        noise.clear();
        if (p_.emission == Emission::poissonian) {
            const int n = p_.mean_photons > 0 ? std::poisson_distribution<int>(p_.mean_photons)(rng_) : 0;
            for (int k = 0; k < n; ++k) {
                const double d = dot_delay();
                if (bernoulli(p_.efficiency)) primary.push_back({d, pol});
            }
            return;
        }
        const double u = uniform();
        if (u < dist_[0]) return;
        const double d = dot_delay();
        if (bernoulli(p_.efficiency)) primary.push_back({d, pol});
        if (u >= dist_[0] + dist_[1]) {
            const double dn = p_.noise_window_ps * uniform();
            const bool rejected = bernoulli(p_.noise_rejection_prob);
            if (!rejected && bernoulli(p_.efficiency)) noise.push_back({dn, pol});
        }
    }

    std::mt19937_64& rng() { return rng_; }

private:
    const SynthesisParams& p_;
    std::mt19937_64 rng_;
    double sigma_j_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::exponential_distribution<double> expo_;
    photostat::PhotonNumberDistribution dist_;
};

// Earliest click per detector within one period.
class Clicks {
public:
    void reset() { times_.fill(std::numeric_limits<double>::infinity()); }
    void add(std::uint16_t ch, double t) { times_[ch] = std::min(times_[ch], t); }
    void flush(std::vector<TimeTag>& out)
    {
        const std::size_t first = out.size();
        for (std::uint16_t ch = 1; ch < times_.size(); ++ch)
            if (std::isfinite(times_[ch])) out.push_back({ch, std::llround(times_[ch])});
        std::sort(out.begin() + first, out.end(),
                  [](const TimeTag& a, const TimeTag& b) { return a.time_ps < b.time_ps; });
        reset();
    }

private:
    std::array<double, 5> times_{};
};

} // namespace

TimeTagStream synthesize_stream(const SynthesisParams& params, const BasisPair& bases)
{
    params.validate();
    Synth syn(params);
    Clock clock{params.rep_rate_hz, std::nullopt};
    const std::int64_t period = clock.period_ps();

    std::vector<TimeTag> records;
    records.reserve(params.pulses * (params.emit_laser ? 2 : 1));
    Clicks clicks;
    clicks.reset();
    std::vector<Photon> primary, noise, primary2, noise2;

    auto laser = [&](std::uint64_t k) {
        if (params.emit_laser)
            records.push_back({channel::laser,
                               std::llround(params.pulse_offset_ps + static_cast<double>(k * period) + syn.jitter())});
    };

    if (params.layout == Layout::hbt) {
        for (std::uint64_t k = 0; k < params.pulses; ++k) {
            const double t_pulse = params.pulse_offset_ps + static_cast<double>(k * period);
            laser(k);
            syn.emit(0, primary, noise);
            for (const auto* list : {&primary, &noise})
                for (const Photon& ph : *list) {
                    const std::uint16_t ch = syn.bernoulli(0.5) ? channel::d1 : channel::d2;
                    clicks.add(ch, t_pulse + ph.delay_ps + syn.jitter());
                }
            clicks.flush(records);
        }
    } else {
        const std::vector<Pattern> patterns = interference_patterns(bases);
        const Matrix2c<double> uc = analysis_matrix(bases.c);
        const Matrix2c<double> ud = analysis_matrix(bases.d);
        // Distinguishable photon: random port, then polarisation analysis.
        auto route = [&](const Photon& ph, double t_ref) {
            const bool port_c = syn.bernoulli(0.5);
            const Matrix2c<double>& u = port_c ? uc : ud;
            const bool plus = syn.bernoulli(std::norm(u(0, ph.pol)));
            const std::uint16_t ch = port_c ? (plus ? channel::c_plus : channel::c_minus)
                                            : (plus ? channel::d_plus : channel::d_minus);
            clicks.add(ch, t_ref + ph.delay_ps + syn.jitter());
        };

        for (std::uint64_t j = 0; 2 * j < params.pulses; ++j) {
            laser(2 * j);
            if (2 * j + 1 >= params.pulses) break;
            laser(2 * j + 1);
            // Both pulses meet at the recombination beamsplitter in period 2j+1.
            const double t_ref = params.pulse_offset_ps + static_cast<double>((2 * j + 1) * period);
            syn.emit(0, primary, noise);
            syn.emit(1, primary2, noise2);
            const bool both = !primary.empty() && !primary2.empty();
            if (both && params.emission == Emission::quantum_dot && syn.bernoulli(params.indistinguishability)) {
                const double u = syn.uniform() * patterns.back().cumulative;
                const auto it = std::lower_bound(patterns.begin(), patterns.end(), u,
                                                 [](const Pattern& p, double v) { return p.cumulative < v; });
                const Pattern& pat = it == patterns.end() ? patterns.back() : *it;
                std::array<double, 2> delays = {primary[0].delay_ps, primary2[0].delay_ps};
                if (syn.bernoulli(0.5)) std::swap(delays[0], delays[1]);
                int next = 0;
                for (std::uint16_t m = 0; m < 4; ++m)
                    for (int n = 0; n < pat.occupation[m]; ++n)
                        clicks.add(static_cast<std::uint16_t>(m + 1), t_ref + delays[next++] + syn.jitter());
            } else {
                for (const Photon& ph : primary) route(ph, t_ref);
                for (const Photon& ph : primary2) route(ph, t_ref);
            }
            for (const Photon& ph : noise) route(ph, t_ref);
            for (const Photon& ph : noise2) route(ph, t_ref);
            clicks.flush(records);
        }
    }

    std::stable_sort(records.begin(), records.end(),
                     [](const TimeTag& a, const TimeTag& b) { return a.time_ps < b.time_ps; });
    TimeTagStream s(std::move(records), clock);
    std::ostringstream gen;
    gen << "layout=" << (params.layout == Layout::hbt ? "hbt" : "entangler") << " g2=" << params.g2
        << " T1_ps=" << params.T1_ps << " pulse_width_ps=" << params.pulse_width_ps
        << " pulses=" << params.pulses << " efficiency=" << params.efficiency
        << " jitter_fwhm_ps=" << params.jitter_fwhm_ps << " noise_rejection_prob=" << params.noise_rejection_prob
        << " seed=" << params.seed;
    s.metadata["generator"] = gen.str();
    return s;
}

std::uint64_t Histogram::total() const
{
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::uint64_t Histogram::area(double lo, double hi) const
{
    std::uint64_t a = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double s = static_cast<double>(bin_start(i));
        if (s >= lo && s < hi) a += counts[i];
    }
    return a;
}

Histogram coincidence_histogram(const TimeTagStream& s, std::uint16_t ch_a, std::uint16_t ch_b,
                                std::int64_t bin_ps, std::int64_t span_ps)
{
    if (bin_ps <= 0 || span_ps <= 0) throw ContractError("bin width and span must be positive");
    Histogram h;
    h.bin_ps = bin_ps;
    const std::int64_t nbins = (2 * span_ps + bin_ps - 1) / bin_ps;
    h.first_edge_ps = -span_ps;
    h.counts.assign(static_cast<std::size_t>(nbins), 0);
    const auto ta = s.channel_times(ch_a);
    const auto tb = s.channel_times(ch_b);
    if (ta.empty() || tb.empty()) {
        h.empty_channel = true;
        return h;
    }
    std::size_t lo = 0;
    for (std::int64_t t : ta) {
        while (lo < tb.size() && tb[lo] < t - span_ps) ++lo;
        for (std::size_t k = lo; k < tb.size() && tb[k] < t + span_ps; ++k) {
            const std::int64_t bin = floor_div(tb[k] - t + span_ps, bin_ps);
            if (bin >= 0 && bin < nbins) ++h.counts[static_cast<std::size_t>(bin)];
        }
    }
    return h;
}

Histogram phase_histogram(const TimeTagStream& s, std::uint16_t ch, std::int64_t bin_ps)
{
    if (bin_ps <= 0) throw ContractError("bin width must be positive");
    const std::int64_t period = s.clock().period_ps();
    Histogram h;
    h.bin_ps = bin_ps;
    h.counts.assign(static_cast<std::size_t>((period + bin_ps - 1) / bin_ps), 0);
    bool any = false;
    for (const auto& r : s.records()) {
        if (r.channel != ch) continue;
        any = true;
        ++h.counts[static_cast<std::size_t>(floor_mod(r.time_ps, period) / bin_ps)];
    }
    h.empty_channel = !any;
    return h;
}

G2Estimate g2_from_histogram(const Histogram& h, std::int64_t rep_period_ps)
{
    if (rep_period_ps <= 0) throw ContractError("repetition period must be positive");
    const double T = static_cast<double>(rep_period_ps);
    const double lo = static_cast<double>(h.first_edge_ps);
    const double hi = static_cast<double>(h.bin_start(h.counts.size()));
    auto inside = [&](int k) { return k * T - T / 2 >= lo && k * T + T / 2 <= hi; };
    int per_side = 0;
    while (inside(per_side + 1) && inside(-(per_side + 1))) ++per_side;
    if (per_side < 5) {
        std::ostringstream msg;
        msg << "histogram spans only " << per_side << " side peaks per side (need 5)";
        throw ContractError(msg.str());
    }
    G2Estimate e;
    e.side_peaks = 2 * per_side;
    e.central_area = static_cast<double>(h.area(-T / 2, T / 2));
    double side = 0.0;
    for (int k = 1; k <= per_side; ++k)
        side += static_cast<double>(h.area(k * T - T / 2, k * T + T / 2) + h.area(-k * T - T / 2, -k * T + T / 2));
    if (!(side > 0)) throw ContractError("side peaks are empty");
    e.mean_side_area = side / e.side_peaks;
    e.g2 = e.central_area / e.mean_side_area;
    // Poisson errors; an empty central peak is assigned one count.
    e.stat_err = std::max(e.central_area, 1.0) / e.mean_side_area
                 * std::sqrt(1.0 / std::max(e.central_area, 1.0) + 1.0 / side);
    return e;
}

double cross_pol_normalisation(double area_copol_sidepeak, double area_crosspol_sidepeak)
{
    if (!(area_copol_sidepeak > 0) || !(area_crosspol_sidepeak > 0))
        throw ParameterError("side-peak areas must be positive");
    return area_crosspol_sidepeak / area_copol_sidepeak;
}

double hom_corrected_visibility(const HomAnalysis& a)
{
    if (!(a.bs_R > 0) || !(a.bs_T > 0)) throw ParameterError("beamsplitter R and T must be positive");
    if (!(a.epsilon >= 0 && a.epsilon < 1)) throw ParameterError("epsilon must lie in [0, 1)");
    if (std::abs(a.bs_R + a.bs_T - 1.0) > 0.02) throw ParameterError("R + T must equal 1 within 0.02");
    const double one_minus = 1.0 - a.epsilon;
    return (a.bs_R * a.bs_R + a.bs_T * a.bs_T) / (2 * a.bs_R * a.bs_T) * (1 + 2 * a.g2) * a.v_raw
           / (one_minus * one_minus);
}

JitterFit fit_jitter(const Histogram& h)
{
    const double to_fwhm = 2.0 * std::sqrt(2.0 * std::log(2.0));
    double n = 0, m1 = 0, m2 = 0;
    int nonzero = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double c = static_cast<double>(h.counts[i]);
        if (c <= 0) continue;
        ++nonzero;
        n += c;
        m1 += c * h.bin_centre(i);
    }
    if (nonzero == 0) throw ContractError("cannot fit an empty histogram");
    m1 /= n;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        m2 += static_cast<double>(h.counts[i]) * std::pow(h.bin_centre(i) - m1, 2);
    const double sigma_m = std::sqrt(m2 / n);
    if (nonzero < 3) return {to_fwhm * sigma_m, 0.0, m1};

    // Fit only the region within 5 moment-sigmas of the centroid.
    std::vector<double> x, y;
    const double reach = 5.0 * std::max(sigma_m, static_cast<double>(h.bin_ps));
    double peak = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (std::abs(h.bin_centre(i) - m1) > reach) continue;
        x.push_back(h.bin_centre(i));
        y.push_back(static_cast<double>(h.counts[i]));
        peak = std::max(peak, y.back());
    }
    const optim::Residuals r = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd res(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double model = q[0] * std::exp(-0.5 * std::pow((x[i] - q[1]) / q[2], 2));
            res[i] = (y[i] - model) / std::sqrt(std::max(y[i], 1.0));
        }
        return res;
    };
    Eigen::VectorXd q0(3);
    q0 << peak, m1, std::max(sigma_m, 0.5 * h.bin_ps);
    const auto fit = optim::levenberg_marquardt(r, q0);
    if (!fit.converged || !std::isfinite(fit.x[2])) throw NumericalError("Gaussian jitter fit did not converge");
    const double sigma = std::abs(fit.x[2]);
    return {to_fwhm * sigma, to_fwhm * std::sqrt(std::max(fit.covariance(2, 2), 0.0)), fit.x[1]};
}

TimeTagStream apply_temporal_filter(const TimeTagStream& s, const FilterWindow& w)
{
    if (!s.clock().t_zero_ps) throw ContractError("temporal filter needs the pulse reference t_zero");
    const std::int64_t period = s.clock().period_ps();
    if (w.t_off_ps < w.t_on_ps) throw ContractError("filter window has t_off before t_on");
    if (w.t_off_ps - w.t_on_ps > static_cast<double>(period))
        throw ContractError("filter window is longer than one repetition period");
    const std::int64_t t0 = *s.clock().t_zero_ps;
    std::vector<TimeTag> kept;
    for (const auto& r : s.records()) {
        const double phase = static_cast<double>(floor_mod(r.time_ps - t0, period));
        // Smallest representative phase + k T that is >= t_on.
        const double k = std::ceil((w.t_on_ps - phase) / period);
        const double rep = phase + k * period;
        if (rep < w.t_off_ps) kept.push_back(r);
    }
    TimeTagStream out(std::move(kept), s.clock());
    out.metadata = s.metadata;
    std::ostringstream win;
    win << "[" << w.t_on_ps << ", " << w.t_off_ps << ")";
    out.metadata["filter_window_ps"] = win.str();
    return out;
}

std::int64_t reference_from_pulse_histogram(const TimeTagStream& laser_stream, std::uint16_t ch)
{
    const Histogram h = phase_histogram(laser_stream, ch, 1);
    if (h.empty_channel) throw ContractError("reference channel has no events");
    // max_element returns the first maximum, i.e. the earlier bin on ties.
    const auto it = std::max_element(h.counts.begin(), h.counts.end());
    return static_cast<std::int64_t>(it - h.counts.begin());
}

CoincidenceCounts count_coincidences(const TimeTagStream& s)
{
    const std::int64_t period = s.clock().period_ps();
    const std::int64_t ref = s.clock().t_zero_ps.value_or(0);
    CoincidenceCounts c;
    std::int64_t current = std::numeric_limits<std::int64_t>::min();
    std::array<bool, 5> seen{};
    auto close = [&] {
        const int nc = seen[channel::c_plus] + seen[channel::c_minus];
        const int nd = seen[channel::d_plus] + seen[channel::d_minus];
        if (nc == 1 && nd == 1) {
            const bool cp = seen[channel::c_plus], dp = seen[channel::d_plus];
            (cp ? (dp ? c.pp : c.pm) : (dp ? c.mp : c.mm))++;
        }
        seen.fill(false);
    };
    for (const auto& r : s.records()) {
        if (r.channel < channel::c_plus || r.channel > channel::d_minus) continue;
        const std::int64_t idx = floor_div(r.time_ps - ref + period / 2, period);
        if (idx != current) {
            close();
            current = idx;
        }
        seen[r.channel] = true;
    }
    close();
    return c;
}

std::vector<tomography::CountRecord> coincidence_records(const CoincidenceCounts& c, const BasisPair& b)
{
    using tomography::ArmSetting;
    auto rec = [&](bool cp, bool dp, std::uint64_t n) {
        return tomography::CountRecord{
            {ArmSetting::named(cp ? plus_state(b.c) : minus_state(b.c)),
             ArmSetting::named(dp ? plus_state(b.d) : minus_state(b.d))},
            n, 1.0};
    };
    return {rec(true, true, c.pp), rec(true, false, c.pm), rec(false, true, c.mp), rec(false, false, c.mm)};
}

FilterSweep filter_sweep(const SynthesisParams& params, const std::vector<double>& t_on_grid_ps, double t_off_ps)
{
    if (t_on_grid_ps.empty()) throw ContractError("filter sweep needs at least one t_on");
    std::vector<tomography::CountRecord> unfiltered;
    std::vector<std::vector<tomography::CountRecord>> filtered(t_on_grid_ps.size());
    FilterSweep out;
    out.points.resize(t_on_grid_ps.size());

    const auto pairs = all_basis_pairs();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        SynthesisParams p = params;
        p.layout = Layout::entangler;
        p.emit_laser = true;
        p.seed = splitmix64(params.seed * 16 + i);
        TimeTagStream s = synthesize_stream(p, pairs[i]);
        s.set_t_zero(reference_from_pulse_histogram(s));

        const CoincidenceCounts c0 = count_coincidences(s);
        out.unfiltered_coincidences += c0.total();
        for (auto& r : coincidence_records(c0, pairs[i])) unfiltered.push_back(r);
        for (std::size_t k = 0; k < t_on_grid_ps.size(); ++k) {
            const FilterWindow w{t_on_grid_ps[k], t_off_ps};
            const CoincidenceCounts c = count_coincidences(apply_temporal_filter(s, w));
            out.points[k].window = w;
            out.points[k].coincidences += c.total();
            for (auto& r : coincidence_records(c, pairs[i])) filtered[k].push_back(r);
        }
    }
    out.unfiltered_singlet_fraction =
        twoqubit::singlet_fraction(tomography::mle_reconstruct(unfiltered).state).value;
    for (std::size_t k = 0; k < t_on_grid_ps.size(); ++k)
        out.points[k].singlet_fraction =
            twoqubit::singlet_fraction(tomography::mle_reconstruct(filtered[k]).state).value;
    return out;
}

void write_histogram_csv(std::ostream& os, const Histogram& h)
{
    os << "bin_start_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) os << h.bin_start(i) << ',' << h.counts[i] << '\n';
}

} // namespace qdent::timetag
