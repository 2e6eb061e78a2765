#include <qdent/tomography.hpp>

#include <qdent/errors.hpp>
#include <qdent/optim.hpp>

#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace qdent::tomography {

Vector2c<double> named_ket(NamedState s)
{
    const double r = 1.0 / std::sqrt(2.0);
    const cdouble i(0, 1);
    Vector2c<double> v;
    switch (s) {
    case NamedState::H: v << 1, 0; break;
    case NamedState::V: v << 0, 1; break;
    case NamedState::D: v << r, r; break;
    case NamedState::A: v << r, -r; break;
    case NamedState::R: v << r, -i * r; break;
    case NamedState::L: v << r, i * r; break;
    }
    return v;
}

std::string to_string(NamedState s)
{
    switch (s) {
    case NamedState::H: return "H";
    case NamedState::V: return "V";
    case NamedState::D: return "D";
    case NamedState::A: return "A";
    case NamedState::R: return "R";
    case NamedState::L: return "L";
    }
    return "?";
}

NamedState named_state_from_string(const std::string& s)
{
    for (NamedState n : {NamedState::H, NamedState::V, NamedState::D, NamedState::A, NamedState::R,
                         NamedState::L})
        if (to_string(n) == s) return n;
    throw ContractError("unknown polarisation setting '" + s + "'");
}

Matrix2c<double> hwp_jones(double angle_deg)
{
    const double t = 2.0 * angle_deg * kPi / 180.0;
    Matrix2c<double> m;
    m << std::cos(t), std::sin(t),
         std::sin(t), -std::cos(t);
    return m;
}

Matrix2c<double> qwp_jones(double angle_deg)
{
    const double t = angle_deg * kPi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    const cdouble i(0, 1);
    Matrix2c<double> m;
    m << c * c + i * s * s, (1.0 - i) * s * c,
         (1.0 - i) * s * c, s * s + i * c * c;
    return m;
}

Vector2c<double> waveplate_ket(const WaveplateAngles& a)
{
    const Vector2c<double> h(1, 0);
    return hwp_jones(a.hwp_deg).adjoint() * qwp_jones(a.qwp_deg).adjoint() * h;
}

WaveplateAngles canonical_angles(NamedState s)
{
    switch (s) {
    case NamedState::H: return {0.0, 0.0};
    case NamedState::V: return {45.0, 0.0};
    case NamedState::D: return {22.5, 0.0};
    case NamedState::A: return {-22.5, 0.0};
    case NamedState::R: return {0.0, 45.0};
    case NamedState::L: return {0.0, -45.0};
    }
    return {};
}

Matrix4c<double> MeasurementSetting::projector() const
{
    Vector4c<double> v;
    const Vector2c<double> a = arm1.ket(), b = arm2.ket();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v(2 * i + j) = a(i) * b(j);
    return v * v.adjoint();
}

std::vector<MeasurementSetting> standard_settings()
{
    const NamedState all[] = {NamedState::H, NamedState::V, NamedState::D,
                              NamedState::A, NamedState::R, NamedState::L};
    std::vector<MeasurementSetting> out;
    for (NamedState a : all)
        for (NamedState b : all) out.push_back({ArmSetting::named(a), ArmSetting::named(b)});
    return out;
}

namespace {

double probability(const twoqubit::TwoQubitDensity& rho, const MeasurementSetting& s)
{
    return std::max(0.0, (rho.matrix() * s.projector()).trace().real());
}

std::vector<CountRecord> make_records(const twoqubit::TwoQubitDensity& rho,
                                      const std::vector<MeasurementSetting>& settings,
                                      std::uint64_t total_pairs, std::mt19937_64* rng)
{
    if (settings.empty()) throw ContractError("no measurement settings given");
    if (total_pairs == 0) throw ContractError("total_pairs must be positive");
    std::vector<CountRecord> out;
    out.reserve(settings.size());
    for (const auto& s : settings) {
        const double mean = static_cast<double>(total_pairs) * probability(rho, s);
        std::uint64_t n;
        if (rng) {
            n = mean > 0 ? std::poisson_distribution<std::uint64_t>(mean)(*rng) : 0;
        } else {
            n = static_cast<std::uint64_t>(std::llround(mean));
        }
        out.push_back({s, n, 1.0});
    }
    return out;
}

constexpr int kParams = 16;

// Lower-triangular T from 16 reals: 4 diagonal entries, then (re, im) of
// the six sub-diagonal entries in row-major order.
Matrix4c<double> unpack(const Eigen::VectorXd& x)
{
    Matrix4c<double> t = Matrix4c<double>::Zero();
    int k = 4;
    for (int a = 0; a < 4; ++a) {
        t(a, a) = x[a];
        for (int b = 0; b < a; ++b, k += 2) t(a, b) = cdouble(x[k], x[k + 1]);
    }
    return t;
}

Eigen::VectorXd pack(const Matrix4c<double>& t)
{
    Eigen::VectorXd x(kParams);
    int k = 4;
    for (int a = 0; a < 4; ++a) {
        x[a] = t(a, a).real();
        for (int b = 0; b < a; ++b, k += 2) {
            x[k] = t(a, b).real();
            x[k + 1] = t(a, b).imag();
        }
    }
    return x;
}

struct Problem {
    std::vector<Matrix4c<double>> proj;
    std::vector<double> n;
    std::vector<double> t; // integration time scaled by the mean count rate
};

Problem make_problem(const std::vector<CountRecord>& records)
{
    if (records.empty()) throw ContractError("no count records given");
    Problem p;
    double rate_sum = 0.0;
    for (const auto& r : records) {
        if (!(r.integration_s > 0)) throw ContractError("integration time must be positive");
        rate_sum += r.counts / r.integration_s;
    }
    const double scale = rate_sum > 0 ? rate_sum / records.size() : 1.0;
    if (!(rate_sum > 0)) throw ReconstructionError("all count records are zero");

    Eigen::MatrixXd design(records.size(), kParams);
    for (std::size_t s = 0; s < records.size(); ++s) {
        const Matrix4c<double> pi = records[s].setting.projector();
        p.proj.push_back(pi);
        p.n.push_back(static_cast<double>(records[s].counts));
        p.t.push_back(records[s].integration_s * scale);
        int k = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = a; b < 4; ++b) {
                design(s, k++) = pi(a, b).real();
                if (b != a) design(s, k++) = pi(a, b).imag();
            }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const Eigen::VectorXd sv = svd.singularValues();
    const Eigen::Index rank = (sv.array() > 1e-9 * sv[0]).count();
    if (rank < kParams) {
        std::ostringstream msg;
        msg << "measurement settings are informationally incomplete (rank " << rank << " of 16)";
        throw ReconstructionError(msg.str());
    }
    return p;
}

// Negative Poisson log-likelihood (constant terms dropped) and its gradient.
double nll(const Problem& p, const Eigen::VectorXd& x, Eigen::VectorXd* grad)
{
    const Matrix4c<double> t = unpack(x);
    const Matrix4c<double> a = t.adjoint() * t;
    double f = 0.0;
    Matrix4c<double> g = Matrix4c<double>::Zero();
    for (std::size_t s = 0; s < p.proj.size(); ++s) {
        const double mu = std::max(p.t[s] * (a * p.proj[s]).trace().real(), 1e-300);
        f += mu - (p.n[s] > 0 ? p.n[s] * std::log(mu) : 0.0);
        if (grad) g += (p.t[s] * (1.0 - p.n[s] / mu)) * (t * p.proj[s]);
    }
    if (grad) {
        // d Tr(T^dag T Pi)/d Re T = 2 Re(T Pi), d/d Im T = 2 Im(T Pi).
        grad->resize(kParams);
        int k = 4;
        for (int r = 0; r < 4; ++r) {
            (*grad)[r] = 2.0 * g(r, r).real();
            for (int c = 0; c < r; ++c, k += 2) {
                (*grad)[k] = 2.0 * g(r, c).real();
                (*grad)[k + 1] = 2.0 * g(r, c).imag();
            }
        }
    }
    return f;
}

twoqubit::TwoQubitDensity to_density(const Eigen::VectorXd& x)
{
    const Matrix4c<double> t = unpack(x);
    Matrix4c<double> a = t.adjoint() * t;
    a /= a.trace().real();
    return twoqubit::TwoQubitDensity(0.5 * (a + a.adjoint()));
}

} // namespace

std::vector<CountRecord> simulate_counts(const twoqubit::TwoQubitDensity& rho,
                                         const std::vector<MeasurementSetting>& settings,
                                         std::uint64_t total_pairs, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return make_records(rho, settings, total_pairs, &rng);
}

std::vector<CountRecord> expected_counts(const twoqubit::TwoQubitDensity& rho,
                                         const std::vector<MeasurementSetting>& settings,
                                         std::uint64_t total_pairs)
{
    return make_records(rho, settings, total_pairs, nullptr);
}

double log_likelihood(const std::vector<CountRecord>& records, const twoqubit::TwoQubitDensity& rho)
{
    double n_sum = 0.0, mu_sum = 0.0;
    for (const auto& r : records) {
        n_sum += r.counts;
        mu_sum += r.integration_s * probability(rho, r.setting);
    }
    const double c = mu_sum > 0 ? n_sum / mu_sum : 0.0;
    double ll = 0.0;
    for (const auto& r : records) {
        const double mu = c * r.integration_s * probability(rho, r.setting);
        const double n = static_cast<double>(r.counts);
        if (n > 0) {
            if (mu <= 0) return -std::numeric_limits<double>::infinity();
            ll += n * std::log(mu);
        }
        ll -= mu + std::lgamma(n + 1.0);
    }
    return ll;
}

Reconstruction mle_reconstruct(const std::vector<CountRecord>& records, const MleOptions& options)
{
    const Problem p = make_problem(records);
    const optim::Objective f = [&p](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return nll(p, x, g); };

    // Times are scaled by the mean count rate, so A = I / mean Tr(Pi) makes
    // the mean expected count match the data.
    double mean_tr = 0.0;
    for (const auto& pi : p.proj) mean_tr += pi.trace().real();
    mean_tr /= p.proj.size();
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(pack(Matrix4c<double>::Identity() / std::sqrt(mean_tr)));
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    for (int k = 0; k < options.random_starts; ++k) {
        Eigen::VectorXd x(kParams);
        for (int i = 0; i < kParams; ++i) x[i] = normal(rng);
        for (int i = 0; i < 4; ++i) x[i] = std::abs(x[i]) + 0.1;
        starts.push_back(x);
    }

    optim::BfgsOptions bopt;
    bopt.f_rel_tol = options.f_rel_tol;
    bopt.max_iterations = options.max_iterations;
    double n_total = 0.0;
    for (double n : p.n) n_total += n;
    bopt.grad_tol = 1e-9 * std::max(1.0, n_total);

    Reconstruction best{twoqubit::TwoQubitDensity(), 0.0, 0};
    double best_f = std::numeric_limits<double>::infinity();
    std::string last;
    for (const auto& x0 : starts) {
        optim::BfgsResult r = optim::minimize_bfgs(f, x0, bopt);
        last = r.message;
        if (!std::isfinite(r.value)) continue;
        if (r.converged) ++best.converged_starts;
        if (r.value < best_f) {
            best_f = r.value;
            best.state = to_density(r.x);
        }
    }
    if (best.converged_starts == 0 || !std::isfinite(best_f)) {
        std::ostringstream msg;
        msg << "maximum-likelihood reconstruction did not converge from any start (last status: " << last << ")";
        throw NumericalError(msg.str());
    }
    best.log_likelihood = log_likelihood(records, best.state);
    return best;
}

double bootstrap_uncertainty(const std::vector<CountRecord>& records, int resamples, std::uint64_t seed)
{
    if (resamples < 50) throw ContractError("bootstrap needs at least 50 resamples");
    std::mt19937_64 rng(seed);
    MleOptions opt;
    opt.random_starts = 1;
    std::vector<double> values;
    values.reserve(resamples);
    for (int k = 0; k < resamples; ++k) {
        std::vector<CountRecord> draw = records;
        for (auto& r : draw)
            r.counts = r.counts > 0
                           ? std::poisson_distribution<std::uint64_t>(static_cast<double>(r.counts))(rng)
                           : 0;
        opt.seed = rng();
        values.push_back(twoqubit::singlet_fraction(mle_reconstruct(draw, opt).state).value);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / (values.size() - 1));
}

void write_records_csv(std::ostream& os, const std::vector<CountRecord>& records)
{
    os << "setting_arm1,setting_arm2,hwp1_deg,qwp1_deg,hwp2_deg,qwp2_deg,counts,integration_s\n";
    for (const auto& r : records) {
        const auto& a = r.setting.arm1;
        const auto& b = r.setting.arm2;
        os << a.label() << ',' << b.label() << ',' << a.angles.hwp_deg << ',' << a.angles.qwp_deg << ','
           << b.angles.hwp_deg << ',' << b.angles.qwp_deg << ',' << r.counts << ',' << r.integration_s
           << '\n';
    }
}

std::vector<CountRecord> read_records_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw ContractError("empty count-record CSV");
    std::vector<CountRecord> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 8) {
            std::ostringstream msg;
            msg << "line " << lineno << ": expected 8 columns, found " << f.size();
            throw ContractError(msg.str());
        }
        auto arm = [&](const std::string& name, const std::string& h, const std::string& q) {
            ArmSetting s = ArmSetting::from_angles({std::stod(h), std::stod(q)});
            if (name != "custom") s.name = named_state_from_string(name);
            return s;
        };
        CountRecord r;
        r.setting = {arm(f[0], f[2], f[3]), arm(f[1], f[4], f[5])};
        r.counts = std::stoull(f[6]);
        r.integration_s = std::stod(f[7]);
        out.push_back(r);
    }
    return out;
}

} // namespace qdent::tomography
