#pragma once

#include <qdent/types.hpp>

#include <array>

namespace qdent::twoqubit {

/// Computational basis order of every two-qubit object: (HH, HV, VH, VV).
/// The first letter is qubit 1 (output arm c), the second is qubit 2 (arm d).
enum class BasisIndex { HH = 0, HV = 1, VH = 2, VV = 3 };

/// Validated 4x4 density matrix: Hermitian, unit trace, positive semidefinite.
class TwoQubitDensity {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-12;
    static constexpr double kEigenFloor = -1e-10;

    /// Maximally mixed state.
    TwoQubitDensity();

    /// Throws ContractError if `m` violates the density invariants.
    explicit TwoQubitDensity(const Matrix4c<double>& m);

    static TwoQubitDensity from_pure(const Vector4c<double>& psi);

    /// Projects a Hermitian-ish estimate onto the physical set by clipping
    /// negative eigenvalues and renormalising.
    static TwoQubitDensity nearest_physical(const Matrix4c<double>& m);

    const Matrix4c<double>& matrix() const { return m_; }
    cdouble operator()(BasisIndex r, BasisIndex c) const
    {
        return m_(static_cast<int>(r), static_cast<int>(c));
    }

    double purity() const;
    bool is_pure(double tol = 1e-9) const { return std::abs(purity() - 1.0) <= tol; }
    Eigen::Vector4d eigenvalues() const;

private:
    Matrix4c<double> m_;
};

enum class BellKind { psi_minus, psi_plus, phi_minus, phi_plus };

Vector4c<double> bell_vector(BellKind kind, double phase = 0.0);
TwoQubitDensity bell_state(BellKind kind, double phase = 0.0);

TwoQubitDensity maximally_mixed();

/// State detected when both interfering photons come from the quantum dot:
/// 1/2 [(|HV><HV| + |VH><VH|) - I (|HV><VH| + |VH><HV|)].
TwoQubitDensity rho_Q(double indistinguishability);

/// Both photons from one pulse: 1/2 (|HH><HH| + |VV><VV|).
TwoQubitDensity rho_B_zero();

/// One dot photon with one background photon: 1/2 (|HV><HV| + |VH><VH|).
TwoQubitDensity rho_B_half();

/// Werner mixture p |Psi-><Psi-| + (1 - p) 1/4.
TwoQubitDensity werner(double p);

/// <psi|rho|psi> for a rank-1 `pure`. Throws ContractError otherwise.
double overlap_with(const TwoQubitDensity& rho, const TwoQubitDensity& pure);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const TwoQubitDensity& rho, const TwoQubitDensity& sigma);

/// ZYZ Euler angles of U = Rz(alpha) Ry(beta) Rz(gamma).
struct EulerAngles {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

template <class Scalar>
Matrix2c<Scalar> su2_from_euler(Scalar alpha, Scalar beta, Scalar gamma)
{
    using C = Complex<Scalar>;
    const C i(0, 1);
    const Scalar c = std::cos(beta / 2), s = std::sin(beta / 2);
    const C ea = std::exp(-i * (alpha + gamma) / Scalar(2));
    const C eb = std::exp(-i * (alpha - gamma) / Scalar(2));
    Matrix2c<Scalar> u;
    u << ea * c, -eb * s,
         std::conj(eb) * s, std::conj(ea) * c;
    return u;
}

inline Matrix2c<double> su2_from_euler(const EulerAngles& e)
{
    return su2_from_euler(e.alpha, e.beta, e.gamma);
}

/// (U_A (x) U_B) rho (U_A (x) U_B)^dagger.
TwoQubitDensity apply_local(const TwoQubitDensity& rho, const Matrix2c<double>& ua,
                            const Matrix2c<double>& ub);

/// Maximally entangled state (U (x) 1)|Phi+>.
Vector4c<double> maximally_entangled(const Matrix2c<double>& u);

struct SingletFractionOptions {
    double tolerance = 1e-9;
    int max_iterations = 400;
};

struct SingletFractionResult {
    double value = 0.0;
    EulerAngles rotation;           ///< U such that (U (x) 1)|Phi+> is optimal
    Vector4c<double> optimal_state; ///< the maximising maximally entangled state
    int converged_starts = 0;
};

/// Fully entangled fraction: max over maximally entangled |Phi> of <Phi|rho|Phi>.
/// Multi-start quasi-Newton search over SU(2) Euler angles; starts include
/// the four Bell states so the result never falls below their overlaps.
SingletFractionResult singlet_fraction(const TwoQubitDensity& rho,
                                       const SingletFractionOptions& options = {});

/// Rotates rho so the optimal maximally entangled state maps onto |Psi->.
/// For states dominated by a single Bell component the result is real.
TwoQubitDensity rotate_to_singlet_frame(const TwoQubitDensity& rho,
                                        const SingletFractionResult& sf);

} // namespace qdent::twoqubit
