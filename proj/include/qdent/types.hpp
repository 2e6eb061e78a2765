#pragma once

#include <Eigen/Dense>

#include <complex>

namespace qdent {

template <class Scalar>
using Complex = std::complex<Scalar>;

template <class Scalar>
using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;

template <class Scalar>
using Vector2c = Eigen::Matrix<Complex<Scalar>, 2, 1>;

template <class Scalar>
using Matrix4c = Eigen::Matrix<Complex<Scalar>, 4, 4>;

template <class Scalar>
using Vector4c = Eigen::Matrix<Complex<Scalar>, 4, 1>;

using cdouble = Complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

} // namespace qdent
