#include <qdent/twoqubit.hpp>

#include <qdent/errors.hpp>
#include <qdent/optim.hpp>

#include <cmath>
#include <sstream>

namespace qdent::twoqubit {
namespace {

Matrix4c<double> hermitian_part(const Matrix4c<double>& m)
{
    return 0.5 * (m + m.adjoint());
}

void check_density(const Matrix4c<double>& m)
{
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > TwoQubitDensity::kHermitianTol) {
        std::ostringstream msg;
        msg << "density matrix is not Hermitian (max deviation " << herm << ")";
        throw ContractError(msg.str());
    }
    const cdouble tr = m.trace();
    if (std::abs(tr - 1.0) > TwoQubitDensity::kTraceTol) {
        std::ostringstream msg;
        msg << "density matrix trace is " << tr.real() << " (expected 1)";
        throw ContractError(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < TwoQubitDensity::kEigenFloor) {
        std::ostringstream msg;
        msg << "density matrix has negative eigenvalue " << es.eigenvalues().minCoeff();
        throw ContractError(msg.str());
    }
}

} // namespace

TwoQubitDensity::TwoQubitDensity() : m_(Matrix4c<double>::Identity() / 4.0) {}

TwoQubitDensity::TwoQubitDensity(const Matrix4c<double>& m)
{
    check_density(m);
    m_ = hermitian_part(m);
}

TwoQubitDensity TwoQubitDensity::from_pure(const Vector4c<double>& psi)
{
    const double n = psi.norm();
    if (!(n > 0)) throw ContractError("cannot build a density matrix from the zero vector");
    const Vector4c<double> v = psi / n;
    return TwoQubitDensity(v * v.adjoint());
}

TwoQubitDensity TwoQubitDensity::nearest_physical(const Matrix4c<double>& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es(hermitian_part(m));
    Eigen::Vector4d lambda = es.eigenvalues().cwiseMax(0.0);
    const double total = lambda.sum();
    if (!(total > 0)) throw ContractError("estimate has no positive spectral weight");
    lambda /= total;
    Matrix4c<double> out = es.eigenvectors() * lambda.cast<cdouble>().asDiagonal()
                           * es.eigenvectors().adjoint();
    out /= out.trace().real();
    return TwoQubitDensity(out);
}

double TwoQubitDensity::purity() const
{
    return (m_ * m_).trace().real();
}

Eigen::Vector4d TwoQubitDensity::eigenvalues() const
{
    Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Vector4c<double> bell_vector(BellKind kind, double phase)
{
    const double s = 1.0 / std::sqrt(2.0);
    const cdouble e = std::polar(1.0, phase);
    Vector4c<double> v = Vector4c<double>::Zero();
    switch (kind) {
    case BellKind::psi_minus: v(1) = s; v(2) = -s * e; break;
    case BellKind::psi_plus:  v(1) = s; v(2) = s * e; break;
    case BellKind::phi_minus: v(0) = s; v(3) = -s * e; break;
    case BellKind::phi_plus:  v(0) = s; v(3) = s * e; break;
    }
    return v;
}

TwoQubitDensity bell_state(BellKind kind, double phase)
{
    return TwoQubitDensity::from_pure(bell_vector(kind, phase));
}

TwoQubitDensity maximally_mixed()
{
    return TwoQubitDensity();
}

TwoQubitDensity rho_Q(double indistinguishability)
{
    if (indistinguishability < 0.0 || indistinguishability > 1.0)
        throw ParameterError("indistinguishability must lie in [0, 1]");
    Matrix4c<double> m = Matrix4c<double>::Zero();
    m(1, 1) = m(2, 2) = 0.5;
    m(1, 2) = m(2, 1) = -0.5 * indistinguishability;
    return TwoQubitDensity(m);
}

TwoQubitDensity rho_B_zero()
{
    Matrix4c<double> m = Matrix4c<double>::Zero();
    m(0, 0) = m(3, 3) = 0.5;
    return TwoQubitDensity(m);
}

TwoQubitDensity rho_B_half()
{
    Matrix4c<double> m = Matrix4c<double>::Zero();
    m(1, 1) = m(2, 2) = 0.5;
    return TwoQubitDensity(m);
}

TwoQubitDensity werner(double p)
{
    if (p < -1.0 / 3.0 || p > 1.0) throw ParameterError("Werner parameter must lie in [-1/3, 1]");
    return TwoQubitDensity(p * bell_state(BellKind::psi_minus).matrix()
                           + (1 - p) * Matrix4c<double>::Identity() / 4.0);
}

double overlap_with(const TwoQubitDensity& rho, const TwoQubitDensity& pure)
{
    if (!pure.is_pure()) throw ContractError("overlap target must be a rank-1 density matrix");
    return (rho.matrix() * pure.matrix()).trace().real();
}

double fidelity(const TwoQubitDensity& rho, const TwoQubitDensity& sigma)
{
    Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es(rho.matrix());
    const Eigen::Vector4d sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix4c<double> root = es.eigenvectors() * sq.cast<cdouble>().asDiagonal()
                                  * es.eigenvectors().adjoint();
    const Matrix4c<double> inner = root * sigma.matrix() * root;
    Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es2(hermitian_part(inner), Eigen::EigenvaluesOnly);
    const double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return tr * tr;
}

TwoQubitDensity apply_local(const TwoQubitDensity& rho, const Matrix2c<double>& ua,
                            const Matrix2c<double>& ub)
{
    Matrix4c<double> u;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) u.block<2, 2>(2 * i, 2 * j) = ua(i, j) * ub;
    Matrix4c<double> out = u * rho.matrix() * u.adjoint();
    out /= out.trace().real();
    return TwoQubitDensity(hermitian_part(out));
}

Vector4c<double> maximally_entangled(const Matrix2c<double>& u)
{
    // (U (x) 1)|Phi+> has components U(i, j) / sqrt(2) at index 2i + j.
    Vector4c<double> v;
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v(2 * i + j) = u(i, j) * s;
    return v;
}

SingletFractionResult singlet_fraction(const TwoQubitDensity& rho,
                                       const SingletFractionOptions& options)
{
    const Matrix4c<double>& m = rho.matrix();
    auto objective = [&m](const Eigen::VectorXd& x) {
        const Vector4c<double> v = maximally_entangled(su2_from_euler(x[0], x[1], x[2]));
        return -(v.adjoint() * m * v)(0).real();
    };

    // Bell states: Phi+ = 1, Phi- = Z, Psi+ = X, Psi- ~ iY; plus four fixed
    // generic starting points.
    const double h = kPi / 2;
    const std::array<Eigen::Vector3d, 8> starts = {
        Eigen::Vector3d(0, 0, 0),       Eigen::Vector3d(h, 0, h),
        Eigen::Vector3d(-h, kPi, h),    Eigen::Vector3d(0, kPi, 0),
        Eigen::Vector3d(0.7, 1.1, -0.4), Eigen::Vector3d(-1.9, 2.3, 0.8),
        Eigen::Vector3d(2.6, 0.5, 1.7), Eigen::Vector3d(-0.3, 2.9, -2.2),
    };

    optim::BfgsOptions bopt;
    bopt.max_iterations = options.max_iterations;
    bopt.f_rel_tol = options.tolerance * 1e-3;
    bopt.grad_tol = 1e-10;
    const optim::Objective f = optim::with_numeric_gradient(objective, 1e-6);

    SingletFractionResult best;
    best.value = -1.0;
    int converged = 0;
    std::string last_message;
    for (const auto& s : starts) {
        const Eigen::VectorXd x0 = s;
        const double start_value = -objective(x0);
        optim::BfgsResult r = optim::minimize_bfgs(f, x0, bopt);
        if (r.converged) ++converged;
        last_message = r.message;
        double value = -r.value;
        Eigen::VectorXd x = r.x;
        if (start_value > value) {
            value = start_value;
            x = x0;
        }
        if (value > best.value) {
            best.value = value;
            best.rotation = {x[0], x[1], x[2]};
        }
    }
    if (converged == 0) {
        std::ostringstream msg;
        msg << "singlet fraction optimiser did not converge from any start (best " << best.value
            << ", last status: " << last_message << ")";
        throw NumericalError(msg.str());
    }
    best.converged_starts = converged;
    best.value = std::clamp(best.value, 0.0, 1.0);
    best.optimal_state = maximally_entangled(su2_from_euler(best.rotation));
    return best;
}

TwoQubitDensity rotate_to_singlet_frame(const TwoQubitDensity& rho, const SingletFractionResult& sf)
{
    // Psi- = (W (x) 1)|Phi+> with W = [[0, 1], [-1, 0]]; the optimal state is
    // (U (x) 1)|Phi+>, so W U^dagger on qubit 1 maps it onto Psi-.
    Matrix2c<double> w;
    w << 0, 1, -1, 0;
    const Matrix2c<double> u = su2_from_euler(sf.rotation);
    return apply_local(rho, w * u.adjoint(), Matrix2c<double>::Identity());
}

} // namespace qdent::twoqubit
