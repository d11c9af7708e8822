#pragma once

// Qutrit Pauli (Weyl-Heisenberg) labels and the single-qutrit Clifford group.
//
// A Pauli label stores ω^phase ⊗_q X^{a_q} Z^{b_q}. The Clifford group is
// built by breadth-first closure over the H and S generators, deduplicated
// up to global phase; element 0 is always the identity.

#include "algebra.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qtrb {

/// Shift operator: X|j⟩ = |j-1 mod 3⟩.
inline CMatrix shift_x() {
    CMatrix x = CMatrix::Zero(3, 3);
    x(0, 1) = 1.0;
    x(1, 2) = 1.0;
    x(2, 0) = 1.0;
    return x;
}

/// Clock operator diag(1, ω, ω²).
inline CMatrix clock_z() {
    CMatrix z = CMatrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) z(k, k) = omega(k);
    return z;
}

/// Qutrit Hadamard (discrete Fourier transform).
inline CMatrix hadamard() {
    CMatrix h(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) h(r, c) = omega(r * c) / std::sqrt(3.0);
    return h;
}

/// Phase gate diag(1, 1, ω).
inline CMatrix phase_s() {
    CMatrix s = CMatrix::Identity(3, 3);
    s(2, 2) = omega(1);
    return s;
}

/// Exponent k with Z·X = ω^k X·Z, read off the clock and shift matrices.
inline int zx_commutation_exponent() {
    static const int k = [] {
        const CMatrix zx = clock_z() * shift_x();
        const CMatrix xz = shift_x() * clock_z();
        for (int j = 0; j < 3; ++j)
            if (max_abs(zx - omega(j) * xz) < 1e-12) return j;
        throw std::logic_error("clock and shift matrices do not ω-commute");
    }();
    return k;
}

struct PauliLabel {
    std::vector<int> x;  // X exponent per qutrit
    std::vector<int> z;  // Z exponent per qutrit
    int phase = 0;       // power of ω

    PauliLabel() = default;
    PauliLabel(std::vector<int> xs, std::vector<int> zs, int ph = 0)
        : x(std::move(xs)), z(std::move(zs)), phase(mod3(ph)) {
        if (x.size() != z.size() || x.empty()) throw std::invalid_argument("PauliLabel: bad exponent vectors");
        for (auto& v : x) v = mod3(v);
        for (auto& v : z) v = mod3(v);
    }

    static PauliLabel identity(int n) { return {std::vector<int>(n, 0), std::vector<int>(n, 0)}; }
    static PauliLabel single(int a, int b, int ph = 0) { return {{a}, {b}, ph}; }

    int n_qutrits() const { return static_cast<int>(x.size()); }

    bool is_identity() const {
        for (int q = 0; q < n_qutrits(); ++q)
            if (x[q] != 0 || z[q] != 0) return false;
        return true;
    }

    /// Number of qutrits with a non-identity factor.
    int weight() const {
        int w = 0;
        for (int q = 0; q < n_qutrits(); ++q) w += (x[q] != 0 || z[q] != 0);
        return w;
    }

    /// Same operator without the ω phase.
    PauliLabel unphased() const { return {x, z, 0}; }

    /// Index of the exponent pattern in [0, 9^n), qutrit 0 most significant.
    std::size_t pattern_index() const {
        std::size_t idx = 0;
        for (int q = 0; q < n_qutrits(); ++q) idx = idx * 9 + static_cast<std::size_t>(3 * x[q] + z[q]);
        return idx;
    }

    static PauliLabel from_pattern_index(std::size_t idx, int n) {
        std::vector<int> xs(n), zs(n);
        for (int q = n - 1; q >= 0; --q) {
            xs[q] = static_cast<int>((idx % 9) / 3);
            zs[q] = static_cast<int>(idx % 3);
            idx /= 9;
        }
        return {xs, zs, 0};
    }

    /// Compact name, e.g. "X_Z2" or "XZ_I"; ignores the phase.
    std::string name() const {
        std::string s;
        for (int q = 0; q < n_qutrits(); ++q) {
            if (q) s += '_';
            if (x[q] == 0 && z[q] == 0) {
                s += 'I';
                continue;
            }
            if (x[q]) s += x[q] == 1 ? "X" : "X2";
            if (z[q]) s += z[q] == 1 ? "Z" : "Z2";
        }
        return s;
    }

    friend bool operator==(const PauliLabel&, const PauliLabel&) = default;
};

inline bool operator<(const PauliLabel& a, const PauliLabel& b) {
    if (a.pattern_index() != b.pattern_index()) return a.pattern_index() < b.pattern_index();
    return a.phase < b.phase;
}

/// Dense matrix ω^phase ⊗ X^a Z^b.
inline QuditMatrix pauli_matrix(const PauliLabel& p) {
    const CMatrix x = shift_x();
    const CMatrix z = clock_z();
    CMatrix out = CMatrix::Identity(1, 1);
    for (int q = 0; q < p.n_qutrits(); ++q) {
        CMatrix f = CMatrix::Identity(3, 3);
        for (int i = 0; i < p.x[q]; ++i) f = f * x;
        for (int i = 0; i < p.z[q]; ++i) f = f * z;
        out = detail::kron(out, f);
    }
    return QuditMatrix(omega(p.phase) * out);
}

/// Label of the product P·Q with the reordering phase tracked.
inline PauliLabel pauli_mul(const PauliLabel& p, const PauliLabel& q) {
    if (p.n_qutrits() != q.n_qutrits()) throw std::invalid_argument("pauli_mul: qutrit count mismatch");
    const int k = zx_commutation_exponent();
    const int n = p.n_qutrits();
    std::vector<int> xs(n), zs(n);
    int phase = p.phase + q.phase;
    for (int i = 0; i < n; ++i) {
        // X^a Z^b X^c Z^d = ω^{k b c} X^{a+c} Z^{b+d}
        phase += k * p.z[i] * q.x[i];
        xs[i] = p.x[i] + q.x[i];
        zs[i] = p.z[i] + q.z[i];
    }
    return {xs, zs, phase};
}

/// Label of P†.
inline PauliLabel pauli_adjoint(const PauliLabel& p) {
    // (X^a Z^b)† = Z^{-b} X^{-a} = ω^{k a b} X^{-a} Z^{-b}
    const int k = zx_commutation_exponent();
    const int n = p.n_qutrits();
    std::vector<int> xs(n), zs(n);
    int phase = -p.phase;
    for (int i = 0; i < n; ++i) {
        phase += k * p.x[i] * p.z[i];
        xs[i] = -p.x[i];
        zs[i] = -p.z[i];
    }
    return {xs, zs, phase};
}

/// All 9^n unphased labels in pattern-index order.
inline std::vector<PauliLabel> all_paulis(int n) {
    std::size_t count = 1;
    for (int i = 0; i < n; ++i) count *= 9;
    std::vector<PauliLabel> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(PauliLabel::from_pattern_index(i, n));
    return out;
}

/// g·P·g† = phase · matrix(image), with `image` unphased and `phase` an exact
/// power of ω (omega_power).
struct PauliConjugation {
    int omega_power = 0;
    PauliLabel image;

    cplx phase() const { return omega(omega_power); }
    /// Image with the phase folded into its label.
    PauliLabel phased() const { return {image.x, image.z, image.phase + omega_power}; }
};

/// Conjugates P by a Clifford by exhaustive scan over all labels of matching size.
inline PauliConjugation conjugate_pauli(const QuditMatrix& g, const PauliLabel& p) {
    const int n = g.n_qutrits();
    if (n != p.n_qutrits()) throw std::invalid_argument("conjugate_pauli: qutrit count mismatch");
    const CMatrix m = g.matrix() * pauli_matrix(p).matrix() * g.matrix().adjoint();
    for (const auto& cand : all_paulis(n)) {
        const CMatrix c = pauli_matrix(cand).matrix();
        if (!detail::global_phase_equal(m, c, 1e-8)) continue;
        const auto [r, col] = detail::dominant_entry(c);
        const cplx phase = m(r, col) / c(r, col);
        for (int j = 0; j < 3; ++j) {
            if (std::abs(phase - omega(j)) < 1e-8) return {j, cand};
        }
        throw std::logic_error("conjugate_pauli: phase is not a power of ω");
    }
    throw std::invalid_argument("conjugate_pauli: no Pauli match, operator is not Clifford");
}

/// Precomputed conjugation action of a fixed Clifford on every n-qutrit Pauli.
class PauliFrameMap {
public:
    explicit PauliFrameMap(const QuditMatrix& g) : n_(g.n_qutrits()) {
        for (const auto& p : all_paulis(n_)) images_.push_back(conjugate_pauli(g, p));
    }

    int n_qutrits() const { return n_; }

    /// Image of a (possibly phased) label.
    PauliLabel apply(const PauliLabel& p) const {
        const auto& c = images_.at(p.pattern_index());
        return {c.image.x, c.image.z, c.image.phase + c.omega_power + p.phase};
    }

private:
    int n_;
    std::vector<PauliConjugation> images_;
};

namespace detail {

// Hash key of a canonical-phase matrix: entries rounded to 6 decimals.
inline std::string rounded_key(const CMatrix& canonical) {
    std::string key;
    key.reserve(static_cast<std::size_t>(canonical.size()) * 16);
    for (Index r = 0; r < canonical.rows(); ++r)
        for (Index c = 0; c < canonical.cols(); ++c) {
            key += std::to_string(std::llround(canonical(r, c).real() * 1e6));
            key += ',';
            key += std::to_string(std::llround(canonical(r, c).imag() * 1e6));
            key += ';';
        }
    return key;
}

/// Finite matrix group modulo global phase with composition and inverse tables.
class PhaseFreeGroup {
public:
    PhaseFreeGroup() = default;

    /// Breadth-first closure over left multiplication by the generators.
    PhaseFreeGroup(const std::vector<CMatrix>& generators, std::size_t expected_order) {
        if (generators.empty()) throw std::invalid_argument("group generation needs generators");
        const Index d = generators.front().rows();
        insert(CMatrix::Identity(d, d));
        for (std::size_t head = 0; head < elements_.size(); ++head) {
            for (const auto& g : generators) {
                const CMatrix cand = canonical_phase(g * elements_[head]);
                if (!find(cand)) insert(cand);
                if (elements_.size() > expected_order)
                    throw std::logic_error("group generation exceeded the expected order; phase dedup is broken");
            }
        }
        if (elements_.size() != expected_order)
            throw std::logic_error("group generation produced " + std::to_string(elements_.size()) +
                                   " elements, expected " + std::to_string(expected_order));
        build_tables();
    }

    /// Adopts a stored element list; tables are rebuilt by multiply-then-lookup.
    explicit PhaseFreeGroup(std::vector<CMatrix> elements) {
        for (auto& e : elements) {
            const CMatrix c = canonical_phase(e);
            if (find(c)) throw std::invalid_argument("group element list has phase-equal duplicates");
            insert(c);
        }
        build_tables();
    }

    std::size_t size() const { return elements_.size(); }
    const CMatrix& element(std::size_t i) const { return elements_.at(i); }
    const std::vector<CMatrix>& elements() const { return elements_; }

    std::optional<std::size_t> find(const CMatrix& u) const {
        const CMatrix c = canonical_phase(u);
        const auto it = buckets_.find(rounded_key(c));
        if (it != buckets_.end()) {
            for (auto idx : it->second)
                if (global_phase_equal(c, elements_[idx], 1e-8)) return idx;
        }
        return std::nullopt;
    }

    /// Index of element(i)·element(j) (j acts first).
    std::size_t compose(std::size_t i, std::size_t j) const { return compose_.at(i * size() + j); }
    std::size_t inverse(std::size_t i) const { return inverse_.at(i); }
    std::size_t identity_index() const { return identity_; }

private:
    void insert(const CMatrix& canonical) {
        buckets_[rounded_key(canonical)].push_back(elements_.size());
        elements_.push_back(canonical);
    }

    void build_tables() {
        const std::size_t n = elements_.size();
        const Index d = elements_.front().rows();
        const auto id = find(CMatrix::Identity(d, d));
        if (!id) throw std::logic_error("group does not contain the identity");
        identity_ = *id;
        compose_.assign(n * n, 0);
        inverse_.assign(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto k = find(elements_[i] * elements_[j]);
                if (!k) throw std::logic_error("group is not closed under composition");
                compose_[i * n + j] = *k;
                if (*k == identity_) inverse_[i] = j;
            }
            if (inverse_[i] == n) throw std::logic_error("group element has no inverse in the table");
        }
    }

    std::vector<CMatrix> elements_;
    std::unordered_map<std::string, std::vector<std::size_t>> buckets_;
    std::vector<std::size_t> compose_;
    std::vector<std::size_t> inverse_;
    std::size_t identity_ = 0;
};

}  // namespace detail

/// |C_d| modulo phase for a single qudit: d³(d²−1).
constexpr std::size_t single_qudit_clifford_order(std::size_t d) { return d * d * d * (d * d - 1); }

/// The 216-element single-qutrit Clifford group.
class CliffordTable {
public:
    explicit CliffordTable(detail::PhaseFreeGroup group) : group_(std::move(group)) {
        if (group_.size() != single_qudit_clifford_order(3))
            throw std::invalid_argument("CliffordTable: expected " +
                                        std::to_string(single_qudit_clifford_order(3)) + " elements");
        for (const auto& e : group_.elements()) matrices_.emplace_back(e);
    }

    std::size_t size() const { return group_.size(); }
    const QuditMatrix& matrix(std::size_t i) const { return matrices_.at(i); }
    std::size_t compose(std::size_t i, std::size_t j) const { return group_.compose(i, j); }
    std::size_t inverse(std::size_t i) const { return group_.inverse(i); }
    std::size_t identity_index() const { return group_.identity_index(); }
    std::optional<std::size_t> find(const QuditMatrix& u) const { return group_.find(u.matrix()); }
    const detail::PhaseFreeGroup& group() const { return group_; }

private:
    detail::PhaseFreeGroup group_;
    std::vector<QuditMatrix> matrices_;
};

/// Generates the single-qutrit Clifford group from H and S.
inline CliffordTable generate_clifford_table() {
    return CliffordTable(detail::PhaseFreeGroup({hadamard(), phase_s()}, single_qudit_clifford_order(3)));
}

/// Index of a Clifford matrix; throws if U is not in the table.
inline std::size_t clifford_lookup(const QuditMatrix& u, const CliffordTable& table) {
    if (u.dim() != 3) throw std::invalid_argument("clifford_lookup: expects a single-qutrit matrix");
    const auto idx = table.find(u);
    if (!idx) throw std::invalid_argument("clifford_lookup: matrix is not a qutrit Clifford");
    return *idx;
}

/// The 24-element single-qubit Clifford group (2×2 matrices).
inline detail::PhaseFreeGroup generate_qubit_clifford_group() {
    CMatrix h(2, 2);
    h << 1.0, 1.0, 1.0, -1.0;
    h /= std::sqrt(2.0);
    CMatrix s = CMatrix::Identity(2, 2);
    s(1, 1) = cplx(0.0, 1.0);
    return detail::PhaseFreeGroup({h, s}, single_qudit_clifford_order(2));
}

template <class Rng>
std::size_t random_clifford(const CliffordTable& table, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, table.size() - 1);
    return pick(rng);
}

/// Uniform exponent pattern over 9^n, phase 0.
template <class Rng>
PauliLabel random_pauli(int n, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, 2);
    std::vector<int> xs(n), zs(n);
    for (int q = 0; q < n; ++q) {
        xs[q] = pick(rng);
        zs[q] = pick(rng);
    }
    return {xs, zs, 0};
}

}  // namespace qtrb
