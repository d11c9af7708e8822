#pragma once

// Dense complex linear algebra for qutrit registers (dimension 3^n):
// unitary and Kraus evolution of density matrices, phase-insensitive
// matrix comparison and multinomial readout sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtrb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr int kQutritDim = 3;

/// ω^k with ω = exp(2πi/3).
inline cplx omega(int k = 1) {
    k = ((k % 3) + 3) % 3;
    if (k == 0) return {1.0, 0.0};
    return {-0.5, (k == 1 ? 1.0 : -1.0) * std::sqrt(3.0) / 2.0};
}

inline int mod3(int k) { return ((k % 3) + 3) % 3; }

inline Index ipow3(int n) {
    Index d = 1;
    for (int i = 0; i < n; ++i) d *= 3;
    return d;
}

/// Number of qutrits for a dimension that is 3^n with n >= 1, else -1.
inline int qutrit_count(Index dim) {
    if (dim < 3) return -1;
    int n = 0;
    while (dim > 1) {
        if (dim % 3 != 0) return -1;
        dim /= 3;
        ++n;
    }
    return n;
}

/// Largest absolute entry deviation.
inline double max_abs(const CMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

namespace detail {

inline void require_same_shape(const CMatrix& a, const CMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// Row-major position of the largest-magnitude entry; ties within 1e-12 of the
// maximum resolve to the first entry in row-major order.
inline std::pair<Index, Index> dominant_entry(const CMatrix& m) {
    double best = 0.0;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) best = std::max(best, std::abs(m(r, c)));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            if (std::abs(m(r, c)) >= best - 1e-12) return {r, c};
    return {0, 0};
}

inline bool global_phase_equal(const CMatrix& u, const CMatrix& v, double tol) {
    require_same_shape(u, v, "global_phase_equal");
    const auto [r, c] = dominant_entry(v);
    const cplx ref = v(r, c);
    if (std::abs(ref) == 0.0) return max_abs(u) <= tol;
    const cplx ratio = u(r, c) / ref;
    if (std::abs(ratio) == 0.0) return false;
    const cplx phase = ratio / std::abs(ratio);
    return max_abs(u - phase * v) <= tol;
}

inline CMatrix canonical_phase(const CMatrix& u) {
    const auto [r, c] = dominant_entry(u);
    const cplx ref = u(r, c);
    if (std::abs(ref) == 0.0) throw std::invalid_argument("canonical_phase: zero matrix");
    CMatrix out = u * (std::conj(ref) / std::abs(ref));
    out(r, c) = cplx(out(r, c).real(), 0.0);
    return out;
}

inline bool is_unitary(const CMatrix& u, double tol) {
    if (u.rows() != u.cols()) return false;
    return max_abs(u * u.adjoint() - CMatrix::Identity(u.rows(), u.cols())) <= tol;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace detail

/// Dense operator on n >= 1 qutrits.
class QuditMatrix {
public:
    explicit QuditMatrix(CMatrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw std::invalid_argument("QuditMatrix: matrix is not square");
        n_ = qutrit_count(m_.rows());
        if (n_ < 1) throw std::invalid_argument("QuditMatrix: dimension is not a power of 3");
    }

    static QuditMatrix identity(int n_qutrits) {
        const Index d = ipow3(n_qutrits);
        return QuditMatrix(CMatrix::Identity(d, d));
    }

    Index dim() const { return m_.rows(); }
    int n_qutrits() const { return n_; }
    const CMatrix& matrix() const { return m_; }
    cplx operator()(Index r, Index c) const { return m_(r, c); }

    QuditMatrix adjoint() const { return QuditMatrix(m_.adjoint()); }
    bool is_unitary(double tol = 1e-10) const { return detail::is_unitary(m_, tol); }

    friend QuditMatrix operator*(const QuditMatrix& a, const QuditMatrix& b) {
        if (a.dim() != b.dim()) throw std::invalid_argument("QuditMatrix product: dimension mismatch");
        return QuditMatrix(a.m_ * b.m_);
    }
    friend QuditMatrix operator*(cplx s, const QuditMatrix& a) { return QuditMatrix(s * a.m_); }

private:
    CMatrix m_;
    int n_ = 0;
};

/// True iff some unit-modulus φ gives max|U - φV| <= tol. φ is read off the
/// largest-magnitude entry of V.
inline bool global_phase_equal(const QuditMatrix& u, const QuditMatrix& v, double tol) {
    return detail::global_phase_equal(u.matrix(), v.matrix(), tol);
}

/// Rescales U by a unit phase so its dominant entry is real and positive.
inline QuditMatrix canonical_phase(const QuditMatrix& u) {
    return QuditMatrix(detail::canonical_phase(u.matrix()));
}

/// Kronecker product; A acts on the leading (most significant) qutrits.
inline QuditMatrix tensor(const QuditMatrix& a, const QuditMatrix& b) {
    return QuditMatrix(detail::kron(a.matrix(), b.matrix()));
}

/// Lifts a single-qutrit operator onto qutrit `target` of an n-qutrit register.
inline CMatrix embed_single(const CMatrix& op, int target, int n_qutrits) {
    if (target < 0 || target >= n_qutrits) throw std::out_of_range("embed_single: qutrit index");
    CMatrix out = CMatrix::Identity(1, 1);
    for (int q = 0; q < n_qutrits; ++q)
        out = detail::kron(out, q == target ? op : CMatrix::Identity(3, 3));
    return out;
}

/// Trace-one Hermitian positive semidefinite operator.
class DensityMatrix {
public:
    /// Validates trace, Hermiticity and positivity.
    explicit DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
        if (rho_.rows() != rho_.cols() || qutrit_count(rho_.rows()) < 1)
            throw std::invalid_argument("DensityMatrix: dimension must be 3^n");
        if (std::abs(rho_.trace() - cplx(1.0, 0.0)) > 1e-10)
            throw std::invalid_argument("DensityMatrix: trace is not 1");
        if (max_abs(rho_ - rho_.adjoint()) > 1e-10)
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-9)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

    static DensityMatrix basis_state(int n_qutrits, Index index) {
        const Index d = ipow3(n_qutrits);
        if (index < 0 || index >= d) throw std::out_of_range("basis_state: index");
        CMatrix m = CMatrix::Zero(d, d);
        m(index, index) = 1.0;
        return DensityMatrix(std::move(m), Unchecked{});
    }

    static DensityMatrix maximally_mixed(int n_qutrits) {
        const Index d = ipow3(n_qutrits);
        return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d), Unchecked{});
    }

    static DensityMatrix pure(const CVector& psi) {
        const CVector v = psi / psi.norm();
        return DensityMatrix(v * v.adjoint());
    }

    Index dim() const { return rho_.rows(); }
    int n_qutrits() const { return qutrit_count(rho_.rows()); }
    const CMatrix& matrix() const { return rho_; }
    cplx operator()(Index r, Index c) const { return rho_(r, c); }

    /// Diagonal as a probability vector (no clipping).
    Eigen::VectorXd populations() const { return rho_.diagonal().real(); }

    // Evolution helpers construct results without re-running the eigensolver;
    // these maps preserve the invariants up to roundoff.
    struct Unchecked {};
    DensityMatrix(CMatrix rho, Unchecked) : rho_(std::move(rho)) {}

private:
    CMatrix rho_;
};

/// U ρ U†.
inline DensityMatrix apply_unitary(const DensityMatrix& rho, const QuditMatrix& u) {
    if (rho.dim() != u.dim()) throw std::invalid_argument("apply_unitary: dimension mismatch");
    return DensityMatrix(u.matrix() * rho.matrix() * u.matrix().adjoint(), DensityMatrix::Unchecked{});
}

/// Throws unless Σ K†K = I within tol.
inline void require_trace_preserving(std::span<const CMatrix> kraus, double tol = 1e-10) {
    if (kraus.empty()) throw std::invalid_argument("Kraus set is empty");
    const Index d = kraus.front().rows();
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& k : kraus) {
        if (k.rows() != d || k.cols() != d) throw std::invalid_argument("Kraus set: inconsistent dimensions");
        sum += k.adjoint() * k;
    }
    if (max_abs(sum - CMatrix::Identity(d, d)) > tol)
        throw std::invalid_argument("Kraus set is not trace preserving");
}

/// Σ K ρ K†.
inline DensityMatrix apply_kraus(const DensityMatrix& rho, std::span<const CMatrix> kraus) {
    require_trace_preserving(kraus);
    if (kraus.front().rows() != rho.dim()) throw std::invalid_argument("apply_kraus: dimension mismatch");
    CMatrix out = CMatrix::Zero(rho.dim(), rho.dim());
    for (const auto& k : kraus) out.noalias() += k * rho.matrix() * k.adjoint();
    return DensityMatrix(std::move(out), DensityMatrix::Unchecked{});
}

inline DensityMatrix apply_kraus(const DensityMatrix& rho, std::span<const QuditMatrix> kraus) {
    std::vector<CMatrix> raw;
    raw.reserve(kraus.size());
    for (const auto& k : kraus) raw.push_back(k.matrix());
    return apply_kraus(rho, std::span<const CMatrix>(raw));
}

/// Ternary label of a computational-basis index; qutrit 0 is the leftmost digit.
inline std::string outcome_label(Index index, int n_qutrits) {
    std::string s(static_cast<std::size_t>(n_qutrits), '0');
    for (int q = n_qutrits - 1; q >= 0; --q) {
        s[static_cast<std::size_t>(q)] = static_cast<char>('0' + index % 3);
        index /= 3;
    }
    return s;
}

/// Digit of qutrit q in a computational-basis index.
inline int outcome_digit(Index index, int q, int n_qutrits) {
    for (int k = n_qutrits - 1; k > q; --k) index /= 3;
    return static_cast<int>(index % 3);
}

/// Shot histogram over ℤ₃ⁿ outcomes, indexed by computational-basis index.
struct MeasurementCounts {
    int n_qutrits = 1;
    std::vector<std::uint64_t> counts;
    std::uint64_t shots = 0;

    std::uint64_t operator[](Index i) const { return counts.at(static_cast<std::size_t>(i)); }

    double frequency(Index i) const {
        return static_cast<double>(counts.at(static_cast<std::size_t>(i))) / static_cast<double>(shots);
    }

    std::vector<double> frequencies() const {
        std::vector<double> f(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            f[i] = static_cast<double>(counts[i]) / static_cast<double>(shots);
        return f;
    }

    /// Non-zero entries keyed by ternary outcome string.
    std::map<std::string, std::uint64_t> by_label() const {
        std::map<std::string, std::uint64_t> out;
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (counts[i] != 0) out[outcome_label(static_cast<Index>(i), n_qutrits)] = counts[i];
        return out;
    }

    /// Histogram of a single qutrit's outcomes.
    MeasurementCounts marginal(int q) const {
        MeasurementCounts m{1, std::vector<std::uint64_t>(3, 0), shots};
        for (std::size_t i = 0; i < counts.size(); ++i)
            m.counts[static_cast<std::size_t>(outcome_digit(static_cast<Index>(i), q, n_qutrits))] += counts[i];
        return m;
    }
};

/// Clips roundoff negativity (down to -1e-9) and renormalizes.
inline std::vector<double> sanitize_distribution(std::span<const double> probs) {
    std::vector<double> p(probs.begin(), probs.end());
    double total = 0.0;
    for (auto& x : p) {
        if (x < -1e-9) throw std::domain_error("probability distribution has negative entry");
        x = std::max(x, 0.0);
        total += x;
    }
    if (total <= 0.0) throw std::domain_error("probability distribution sums to zero");
    for (auto& x : p) x /= total;
    return p;
}

/// Multinomial draw over a probability vector via sequential binomials.
inline MeasurementCounts sample_distribution(std::span<const double> probs, int n_qutrits,
                                             std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("sample_counts: shots must be >= 1");
    const auto p = sanitize_distribution(probs);
    std::mt19937_64 rng(seed);
    MeasurementCounts out{n_qutrits, std::vector<std::uint64_t>(p.size(), 0), shots};
    std::uint64_t remaining = shots;
    double mass_left = 1.0;
    for (std::size_t i = 0; i + 1 < p.size() && remaining > 0; ++i) {
        if (p[i] <= 0.0) {
            mass_left -= p[i];
            continue;
        }
        const double q = std::clamp(p[i] / mass_left, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> draw(remaining, q);
        const auto k = q >= 1.0 ? remaining : draw(rng);
        out.counts[i] = k;
        remaining -= k;
        mass_left -= p[i];
    }
    out.counts.back() += remaining;
    return out;
}

/// Samples computational-basis readout of ρ.
inline MeasurementCounts sample_counts(const DensityMatrix& rho, std::uint64_t shots, std::uint64_t seed) {
    const Eigen::VectorXd pops = rho.populations();
    return sample_distribution(std::span<const double>(pops.data(), static_cast<std::size_t>(pops.size())),
                               rho.n_qutrits(), shots, seed);
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
template <class Rng>
CMatrix haar_unitary(Index dim, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix z(dim, dim);
    for (Index r = 0; r < dim; ++r)
        for (Index c = 0; c < dim; ++c) z(r, c) = cplx(g(rng), g(rng)) / std::sqrt(2.0);
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < dim; ++i) {
        const cplx d = r(i, i);
        q.col(i) *= d / std::abs(d);
    }
    return q;
}

/// splitmix64 finalizer, used to derive independent per-job seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mix_seed(master);
    for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632BE59BD9B4E019ull));
    return s;
}

}  // namespace qtrb
