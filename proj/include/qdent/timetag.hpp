#pragma once

#include <qdent/tomography.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qdent::timetag {

struct TimeTag {
    std::uint16_t channel = 0;
    std::int64_t time_ps = 0;

    bool operator==(const TimeTag&) const = default;
};

/// Channel assignments used by the synthesiser.
namespace channel {
inline constexpr std::uint16_t laser = 0;
inline constexpr std::uint16_t d1 = 1;      ///< HBT detector 1
inline constexpr std::uint16_t d2 = 2;      ///< HBT detector 2
inline constexpr std::uint16_t c_plus = 1;  ///< entangler port c, first basis state
inline constexpr std::uint16_t c_minus = 2;
inline constexpr std::uint16_t d_plus = 3;  ///< entangler port d, first basis state
inline constexpr std::uint16_t d_minus = 4;
} // namespace channel

struct Clock {
    double rep_rate_hz = 76.3e6;
    std::optional<std::int64_t> t_zero_ps;

    std::int64_t period_ps() const;
};

class TimeTagStream {
public:
    TimeTagStream() = default;
    TimeTagStream(std::vector<TimeTag> records, Clock clock);

    const std::vector<TimeTag>& records() const { return records_; }
    const Clock& clock() const { return clock_; }
    void set_t_zero(std::int64_t t) { clock_.t_zero_ps = t; }

    std::vector<std::int64_t> channel_times(std::uint16_t ch) const;
    std::size_t count(std::uint16_t ch) const;
    std::size_t size() const { return records_.size(); }

    std::map<std::string, std::string> metadata;

    bool operator==(const TimeTagStream& o) const { return records_ == o.records_ && clock_.rep_rate_hz == o.clock_.rep_rate_hz && clock_.t_zero_ps == o.clock_.t_zero_ps; }

private:
    std::vector<TimeTag> records_;
    Clock clock_;
};

/// Little-endian binary form: 32-byte header (8-byte magic, u32 version,
/// u32 reserved, u64 rep rate in mHz, i64 t_zero with INT64_MIN for unset)
/// followed by (u16 channel, i64 ps) records.
void write_binary(std::ostream& os, const TimeTagStream& s);
TimeTagStream read_binary(std::istream& is);

enum class Layout {
    hbt,       ///< one source, 50:50 splitter, detectors d1 and d2
    entangler, ///< alternate H/V routing, delay line, recombination, polarisation analysis
};

enum class Emission {
    quantum_dot, ///< (P0, P1, P2) from g2, P2 adds an early noise photon
    poissonian,  ///< Poisson photon number of mean `mean_photons`, all with the dot profile
};

struct SynthesisParams {
    Layout layout = Layout::hbt;
    Emission emission = Emission::quantum_dot;
    double g2 = 0.02;
    double mean_photons = 1.0;
    double T1_ps = 60.0;
    double pulse_width_ps = 5.0;
    double rep_rate_hz = 76.3e6;
    std::uint64_t pulses = 100000;
    double efficiency = 0.3;  ///< per-photon survival up to and including detection
    double jitter_fwhm_ps = 35.0;
    double noise_rejection_prob = 0.0;
    double noise_window_ps = 5.0;  ///< noise photon delay is uniform on [0, window]
    double indistinguishability = 1.0;
    std::int64_t pulse_offset_ps = 1000;
    bool emit_laser = true;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Analysis basis of one entangler arm; "+" goes to the first channel.
enum class Basis { HV, DA, RL };

struct BasisPair {
    Basis c = Basis::HV;
    Basis d = Basis::HV;
};

/// The nine basis pairs whose four outcomes make up the 36 tomography settings.
std::vector<BasisPair> all_basis_pairs();

tomography::NamedState plus_state(Basis b);
tomography::NamedState minus_state(Basis b);

/// Simulates `params.pulses` laser periods. For the entangler layout, pulse
/// 2j is routed H into the delay line and pulse 2j+1 V into the short arm;
/// both reach the recombination beamsplitter in period 2j+1 and are analysed
/// in `bases`.
TimeTagStream synthesize_stream(const SynthesisParams& params, const BasisPair& bases = {});

struct Histogram {
    std::int64_t first_edge_ps = 0;
    std::int64_t bin_ps = 1;
    std::vector<std::uint64_t> counts;
    bool empty_channel = false;

    std::int64_t bin_start(std::size_t i) const { return first_edge_ps + static_cast<std::int64_t>(i) * bin_ps; }
    double bin_centre(std::size_t i) const { return bin_start(i) + 0.5 * bin_ps; }
    std::uint64_t total() const;
    /// Sum of counts in bins whose start lies in [lo, hi).
    std::uint64_t area(double lo, double hi) const;
};

/// Histogram of t_b - t_a over [-span, span) in bins of bin_ps.
Histogram coincidence_histogram(const TimeTagStream& s, std::uint16_t ch_a, std::uint16_t ch_b,
                                std::int64_t bin_ps, std::int64_t span_ps);

/// Histogram of arrival phase (t mod period) of one channel over [0, period).
Histogram phase_histogram(const TimeTagStream& s, std::uint16_t ch, std::int64_t bin_ps = 1);

struct G2Estimate {
    double g2 = 0.0;
    double stat_err = 0.0;
    double central_area = 0.0;
    double mean_side_area = 0.0;
    int side_peaks = 0;
};

/// Central-peak area over mean side-peak area, one period per peak.
G2Estimate g2_from_histogram(const Histogram& h, std::int64_t rep_period_ps);

/// Ratio crosspol / copol of side-peak areas.
double cross_pol_normalisation(double area_copol_sidepeak, double area_crosspol_sidepeak);

struct HomAnalysis {
    double v_raw = 0.0;
    double epsilon = 0.0;
    double bs_R = 0.5;
    double bs_T = 0.5;
    double g2 = 0.0;
    double normalisation_factor = 1.0;
};

/// V_HOM = (R^2 + T^2) / (2RT) (1 + 2 g2) V_raw / (1 - eps)^2.
double hom_corrected_visibility(const HomAnalysis& a);

struct JitterFit {
    double fwhm_ps = 0.0;
    double fit_error = 0.0;
    double centre_ps = 0.0;
};

/// Gaussian least-squares fit of a unimodal histogram.
JitterFit fit_jitter(const Histogram& h);

/// Rectangular mask [t_on, t_off) relative to the pulse reference.
struct FilterWindow {
    double t_on_ps = 0.0;
    double t_off_ps = 0.0;
};

TimeTagStream apply_temporal_filter(const TimeTagStream& s, const FilterWindow& w);

/// Most populated 1 ps bin of the laser arrival phase; ties go to the earlier bin.
std::int64_t reference_from_pulse_histogram(const TimeTagStream& laser_stream,
                                            std::uint16_t ch = channel::laser);

struct CoincidenceCounts {
    std::uint64_t pp = 0, pm = 0, mp = 0, mm = 0;

    std::uint64_t total() const { return pp + pm + mp + mm; }
};

/// Periods with exactly one click in port c and exactly one in port d.
CoincidenceCounts count_coincidences(const TimeTagStream& s);

/// Four tomography records (++, +-, -+, --) for one basis pair.
std::vector<tomography::CountRecord> coincidence_records(const CoincidenceCounts& c, const BasisPair& b);

struct FilterSweepPoint {
    FilterWindow window;
    double singlet_fraction = 0.0;
    std::uint64_t coincidences = 0;
};

struct FilterSweep {
    std::uint64_t unfiltered_coincidences = 0;
    double unfiltered_singlet_fraction = 0.0;
    std::vector<FilterSweepPoint> points;
};

/// Synthesises the nine basis-pair streams, then for each t_on filters with
/// [t_on, t_off), post-selects coincidences and reconstructs by maximum likelihood.
FilterSweep filter_sweep(const SynthesisParams& params, const std::vector<double>& t_on_grid_ps,
                         double t_off_ps);

void write_histogram_csv(std::ostream& os, const Histogram& h);

} // namespace qdent::timetag
