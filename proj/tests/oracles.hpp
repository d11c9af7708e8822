#pragma once

// Reference computations written directly from definitions, independent of
// the library code paths they check.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline cplx w(int k) {
    const double a = 2.0 * std::numbers::pi * k / 3.0;
    return {std::cos(a), std::sin(a)};
}

/// Shift with X|j⟩ = |j−1 mod 3⟩, written entry by entry.
inline Mat X() {
    Mat m = Mat::Zero(3, 3);
    m(0, 1) = 1.0;
    m(1, 2) = 1.0;
    m(2, 0) = 1.0;
    return m;
}

inline Mat Z() {
    Mat m = Mat::Zero(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = w(1);
    m(2, 2) = w(2);
    return m;
}

inline Mat H() {
    Mat m(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = w(r * c) / std::sqrt(3.0);
    return m;
}

inline Mat power(const Mat& a, int k) {
    Mat out = Mat::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) out = out * a;
    return out;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// X^a Z^b on one qutrit.
inline Mat xz(int a, int b) { return power(X(), a) * power(Z(), b); }

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// min over unit phases of max|U − φV| computed via the best least-squares phase.
inline double phase_distance(const Mat& u, const Mat& v) {
    const cplx inner = (v.adjoint() * u).trace();
    const cplx phi = std::abs(inner) > 0 ? inner / std::abs(inner) : cplx(1.0);
    return max_abs(u - phi * v);
}

/// Two-level rotation on levels (i, j) with block [[c, −i e^{−iϕ}s], [−i e^{iϕ}s, c]].
inline Mat pulse(int i, int j, double theta, double phi) {
    Mat m = Mat::Identity(3, 3);
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    const cplx I(0.0, 1.0);
    m(i, i) = c;
    m(j, j) = c;
    m(i, j) = -I * std::exp(-I * phi) * s;
    m(j, i) = -I * std::exp(I * phi) * s;
    return m;
}

/// Phase e^{ia} on level j.
inline Mat level_phase(int j, double a) {
    Mat m = Mat::Identity(3, 3);
    m(j, j) = std::exp(cplx(0.0, a));
    return m;
}

/// (1 − λ)ρ + λ·𝟙/d.
inline Mat depolarize(const Mat& rho, double lambda) {
    const auto d = rho.rows();
    return (1.0 - lambda) * rho + lambda * Mat::Identity(d, d) / static_cast<double>(d);
}

/// Random density matrix from a Ginibre matrix G: GG†/Tr.
inline Mat random_density(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) g(r, c) = cplx(n(rng), n(rng));
    Mat rho = g * g.adjoint();
    return rho / rho.trace();
}

/// Haar unitary by Gram–Schmidt on Gaussian columns.
inline Mat random_unitary(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat u(dim, dim);
    for (int c = 0; c < dim; ++c) {
        Eigen::VectorXcd v(dim);
        for (int r = 0; r < dim; ++r) v(r) = cplx(n(rng), n(rng));
        for (int k = 0; k < c; ++k) v -= (u.col(k).adjoint() * v)(0) * u.col(k);
        u.col(c) = v / v.norm();
    }
    return u;
}

}  // namespace oracle
