#pragma once

// Compilation of single-qutrit unitaries into the native gateset: resonant
// π/2 and π pulses in the {|0⟩,|1⟩} and {|1⟩,|2⟩} subspaces plus virtual Z
// frame updates.
//
// Conventions (operators; time runs right to left in products):
//   Z^{(s)}_a       phase e^{ia} on the upper level of subspace s
//   R^{(s)}_ϕ(θ)    exp(-iθ/2 (cos ϕ σx + sin ϕ σy)) on subspace s
//   U(θ, φ, λ)      Z_φ X_θ Z_λ = [[c, -i e^{iλ} s], [-i e^{iφ} s, e^{i(φ+λ)} c]]
//   Y_θ             U(θ, π/2, -π/2) = [[c, -s], [s, c]]

#include "algebra.hpp"
#include "groups.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace qtrb {

enum class Subspace { s01, s12, s02 };

inline std::pair<int, int> subspace_levels(Subspace s) {
    switch (s) {
        case Subspace::s01: return {0, 1};
        case Subspace::s12: return {1, 2};
        case Subspace::s02: return {0, 2};
    }
    throw std::invalid_argument("unknown subspace");
}

/// Level outside the subspace.
inline int spectator_level(Subspace s) {
    const auto [i, j] = subspace_levels(s);
    return 3 - i - j;
}

inline std::string to_string(Subspace s) {
    switch (s) {
        case Subspace::s01: return "01";
        case Subspace::s12: return "12";
        case Subspace::s02: return "02";
    }
    return "?";
}

inline Subspace parse_subspace(const std::string& s) {
    if (s == "01") return Subspace::s01;
    if (s == "12") return Subspace::s12;
    if (s == "02") return Subspace::s02;
    throw std::invalid_argument("unknown subspace '" + s + "'");
}

/// Wraps an angle into (-π, π].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

inline bool angle_is(double a, double target, double tol = 1e-10) {
    return std::abs(wrap_angle(a - target)) < tol;
}

/// 2×2 block placed on the levels of subspace s, identity on the spectator.
inline CMatrix embed_block(const CMatrix& block, Subspace s) {
    const auto [i, j] = subspace_levels(s);
    CMatrix out = CMatrix::Identity(3, 3);
    out(i, i) = block(0, 0);
    out(i, j) = block(0, 1);
    out(j, i) = block(1, 0);
    out(j, j) = block(1, 1);
    return out;
}

inline CMatrix two_level_u(double theta, double phi, double lambda) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const cplx mi(0.0, -1.0);
    CMatrix u(2, 2);
    u << c, mi * std::polar(1.0, lambda) * s, mi * std::polar(1.0, phi) * s, std::polar(1.0, phi + lambda) * c;
    return u;
}

/// U(θ, φ, λ) acting on subspace s of a qutrit.
inline QuditMatrix embed_subspace_unitary(double theta, double phi, double lambda, Subspace s) {
    return QuditMatrix(embed_block(two_level_u(theta, phi, lambda), s));
}

/// Exchange of the two levels of subspace s. A π pulse equals this Clifford
/// up to virtual Z phases.
inline CMatrix level_exchange(Subspace s) {
    const auto [i, j] = subspace_levels(s);
    CMatrix p = CMatrix::Identity(3, 3);
    p(i, i) = 0.0;
    p(j, j) = 0.0;
    p(i, j) = 1.0;
    p(j, i) = 1.0;
    return p;
}

struct NativeGate {
    enum class Kind { PhysicalPulse, VirtualZ };

    Kind kind = Kind::VirtualZ;
    Subspace subspace = Subspace::s01;
    double angle = 0.0;
    double frame_phase = 0.0;  // pulse axis in the subspace equator

    static NativeGate pulse(Subspace s, double angle, double frame = 0.0) {
        return {Kind::PhysicalPulse, s, angle, frame};
    }
    static NativeGate virtual_z(Subspace s, double angle) { return {Kind::VirtualZ, s, wrap_angle(angle), 0.0}; }

    bool is_pulse() const { return kind == Kind::PhysicalPulse; }

    /// 3×3 matrix of the gate.
    CMatrix matrix() const {
        if (subspace == Subspace::s02) throw std::invalid_argument("native gates act on the 01 or 12 subspace only");
        if (kind == Kind::VirtualZ) {
            CMatrix d = CMatrix::Identity(3, 3);
            const int upper = subspace_levels(subspace).second;
            d(upper, upper) = std::polar(1.0, angle);
            return d;
        }
        const double c = std::cos(angle / 2.0);
        const double s = std::sin(angle / 2.0);
        const cplx mi(0.0, -1.0);
        CMatrix b(2, 2);
        b << c, mi * std::polar(1.0, -frame_phase) * s, mi * std::polar(1.0, frame_phase) * s, c;
        return embed_block(b, subspace);
    }
};

/// Time-ordered native gates.
struct NativeSequence {
    std::vector<NativeGate> gates;

    /// Physical pulses only; virtual Z gates are free.
    int pulse_count() const {
        return static_cast<int>(std::count_if(gates.begin(), gates.end(), [](const auto& g) { return g.is_pulse(); }));
    }

    /// Product G_last ⋯ G_first.
    QuditMatrix unitary() const {
        CMatrix u = CMatrix::Identity(3, 3);
        for (const auto& g : gates) u = g.matrix() * u;
        return QuditMatrix(std::move(u));
    }

    void append(const NativeSequence& other) { gates.insert(gates.end(), other.gates.begin(), other.gates.end()); }
};

/// True if the sequence reproduces the target up to global phase.
inline bool verifies(const NativeSequence& seq, const QuditMatrix& target, double tol = 1e-9) {
    return global_phase_equal(seq.unitary(), target, tol);
}

/// True if the sequence acts as `block` on subspace s (up to a phase on the
/// subspace) and leaves the spectator level decoupled.
inline bool verifies_on_subspace(const NativeSequence& seq, const CMatrix& block, Subspace s, double tol = 1e-9) {
    const CMatrix u = seq.unitary().matrix();
    const auto [i, j] = subspace_levels(s);
    const int k = spectator_level(s);
    CMatrix sub(2, 2);
    sub << u(i, i), u(i, j), u(j, i), u(j, j);
    if (!detail::global_phase_equal(sub, block, tol)) return false;
    return std::abs(std::abs(u(k, k)) - 1.0) <= tol;
}

/// Virtual Z gates putting phase e^{iγ} on both levels of subspace s relative
/// to its spectator.
inline std::vector<NativeGate> subspace_phase(Subspace s, double gamma) {
    if (s == Subspace::s01) return {NativeGate::virtual_z(Subspace::s12, -gamma)};
    return {NativeGate::virtual_z(Subspace::s01, gamma), NativeGate::virtual_z(Subspace::s12, gamma)};
}

/// U(θ,φ,λ) = Z_{φ−π/2} X_{π/2} Z_{π−θ} X_{π/2} Z_{λ−π/2} on subspace s.
/// The five-gate product equals e^{−iθ/2}·U on the subspace, so a trailing
/// virtual Z restores the phase relative to the spectator level.
inline NativeSequence zxzxz(double theta, double phi, double lambda, Subspace s) {
    if (s == Subspace::s02) throw std::invalid_argument("zxzxz: subspace must be 01 or 12");
    NativeSequence seq;
    seq.gates = {
        NativeGate::virtual_z(s, lambda - kPi / 2.0),
        NativeGate::pulse(s, kPi / 2.0),
        NativeGate::virtual_z(s, kPi - theta),
        NativeGate::pulse(s, kPi / 2.0),
        NativeGate::virtual_z(s, phi - kPi / 2.0),
    };
    for (const auto& g : subspace_phase(s, theta / 2.0)) seq.gates.push_back(g);
    return seq;
}

/// Y_θ on a native subspace via the ZXZXZ pattern.
inline NativeSequence y_rotation(double theta, Subspace s) { return zxzxz(theta, kPi / 2.0, -kPi / 2.0, s); }

struct TwoLevelParameters {
    double theta = 0.0;
    double phi = 0.0;
    double lambda = 0.0;
    cplx global_phase{1.0, 0.0};
};

/// Solves W = g · U(θ, φ, λ) for a 2×2 unitary, θ in [0, π].
inline TwoLevelParameters two_level_parameters(const CMatrix& w) {
    if (w.rows() != 2 || w.cols() != 2 || !detail::is_unitary(w, 1e-8))
        throw std::invalid_argument("two_level_parameters: expects a 2x2 unitary");
    constexpr double tiny = 1e-12;
    TwoLevelParameters p;
    p.theta = 2.0 * std::atan2(std::abs(w(1, 0)), std::abs(w(0, 0)));
    const bool has_cos = std::abs(w(0, 0)) > tiny;
    const bool has_sin = std::abs(w(1, 0)) > tiny;
    if (has_cos) {
        p.global_phase = w(0, 0) / std::abs(w(0, 0));
    } else {
        // λ is free; pick λ = 0 so that W01 = g·(−i)
        p.global_phase = cplx(0.0, 1.0) * w(0, 1) / std::abs(w(0, 1));
    }
    if (has_sin) {
        p.lambda = wrap_angle(std::arg(w(0, 1) / p.global_phase) + kPi / 2.0);
        p.phi = wrap_angle(std::arg(w(1, 0) / p.global_phase) + kPi / 2.0);
    } else {
        p.phi = 0.0;
        p.lambda = wrap_angle(std::arg(w(1, 1) / p.global_phase));
    }
    return p;
}

/// Angles of the cosine-sine pattern
/// U = D(φ1,φ2)·Y12(θ1)·Y01(θ2)·D(φ3,φ4)·Y12(θ3)·D(φ5,2φ5), D(a,b) = diag(1, e^{ia}, e^{ib}).
struct DitaParameters {
    std::array<double, 5> phi{};
    std::array<double, 3> theta{};
    cplx global_phase{1.0, 0.0};
};

inline CMatrix diag_phases(double a, double b) {
    CMatrix d = CMatrix::Identity(3, 3);
    d(1, 1) = std::polar(1.0, a);
    d(2, 2) = std::polar(1.0, b);
    return d;
}

inline CMatrix y_matrix(double theta, Subspace s) {
    return embed_block(two_level_u(theta, kPi / 2.0, -kPi / 2.0), s);
}

inline CMatrix dita_reconstruct(const DitaParameters& p) {
    return p.global_phase * diag_phases(p.phi[0], p.phi[1]) * y_matrix(p.theta[0], Subspace::s12) *
           y_matrix(p.theta[1], Subspace::s01) * diag_phases(p.phi[2], p.phi[3]) *
           y_matrix(p.theta[2], Subspace::s12) * diag_phases(p.phi[4], 2.0 * p.phi[4]);
}

/// Extracts the cosine-sine parameters from a 3×3 unitary. Free phases in
/// degenerate cases are set to zero; all θ land in [0, π].
inline DitaParameters dita_parameters(const QuditMatrix& target) {
    if (target.dim() != 3 || !target.is_unitary(1e-8))
        throw std::invalid_argument("dita_decompose: expects a 3x3 unitary");
    constexpr double tiny = 1e-12;
    const CMatrix& u = target.matrix();
    DitaParameters p;

    const double a0 = std::abs(u(0, 0));
    const double a1 = std::abs(u(1, 0));
    const double a2 = std::abs(u(2, 0));
    p.theta[1] = 2.0 * std::atan2(std::hypot(a1, a2), a0);
    p.theta[0] = 2.0 * std::atan2(a2, a1);
    if (a0 > tiny) {
        p.global_phase = u(0, 0) / a0;
    } else if (a1 > tiny) {
        p.global_phase = u(1, 0) / a1;
    } else {
        p.global_phase = u(2, 0) / a2;
    }
    p.phi[0] = a1 > tiny ? wrap_angle(std::arg(u(1, 0) / p.global_phase)) : 0.0;
    p.phi[1] = a2 > tiny ? wrap_angle(std::arg(u(2, 0) / p.global_phase)) : 0.0;

    const CMatrix w = (y_matrix(p.theta[1], Subspace::s01).adjoint() * y_matrix(p.theta[0], Subspace::s12).adjoint() *
                       diag_phases(p.phi[0], p.phi[1]).adjoint() * u) /
                      p.global_phase;
    const CMatrix b = w.block(1, 1, 2, 2);
    const double c3 = std::abs(b(0, 0));
    const double s3 = std::abs(b(1, 0));
    p.theta[2] = 2.0 * std::atan2(s3, c3);
    if (c3 > tiny && s3 > tiny) {
        const double a = std::arg(b(0, 0));
        const double bb = std::arg(-b(0, 1));
        const double c = std::arg(b(1, 0));
        p.phi[4] = wrap_angle(bb - a);
        p.phi[2] = wrap_angle(a - p.phi[4]);
        p.phi[3] = wrap_angle(c - p.phi[4]);
    } else if (c3 > tiny) {
        p.phi[4] = 0.0;
        p.phi[2] = wrap_angle(std::arg(b(0, 0)));
        p.phi[3] = wrap_angle(std::arg(b(1, 1)));
    } else {
        p.phi[4] = 0.0;
        p.phi[2] = wrap_angle(std::arg(-b(0, 1)));
        p.phi[3] = wrap_angle(std::arg(b(1, 0)));
    }
    return p;
}

/// Diagonal diag(1, e^{ia}, e^{ib}) as two virtual Z gates.
inline NativeSequence virtual_diag(double a, double b) {
    NativeSequence seq;
    seq.gates = {NativeGate::virtual_z(Subspace::s01, a), NativeGate::virtual_z(Subspace::s12, b)};
    return seq;
}

/// Cosine-sine decomposition with every Y rotation expanded through ZXZXZ.
/// The raw sequence always holds six π/2 pulses; see optimize_sequence.
inline NativeSequence dita_decompose(const QuditMatrix& target) {
    const DitaParameters p = dita_parameters(target);
    NativeSequence seq = virtual_diag(p.phi[4], 2.0 * p.phi[4]);
    seq.append(y_rotation(p.theta[2], Subspace::s12));
    seq.append(virtual_diag(p.phi[2], p.phi[3]));
    seq.append(y_rotation(p.theta[1], Subspace::s01));
    seq.append(y_rotation(p.theta[0], Subspace::s12));
    seq.append(virtual_diag(p.phi[0], p.phi[1]));
    return seq;
}

namespace detail {

// Accumulated diagonal of a run of virtual Z gates: phases of levels 1 and 2
// relative to level 0.
struct PhaseFrame {
    double p1 = 0.0;
    double p2 = 0.0;

    void add(const NativeGate& g) {
        if (g.subspace == Subspace::s01) p1 += g.angle;
        else p2 += g.angle;
    }

    /// Relative phase across the levels of a native subspace.
    double relative(Subspace s) const { return s == Subspace::s01 ? p1 : p2 - p1; }

    NativeSequence gates() const {
        NativeSequence seq;
        if (!angle_is(p1, 0.0, 1e-12)) seq.gates.push_back(NativeGate::virtual_z(Subspace::s01, p1));
        if (!angle_is(p2, 0.0, 1e-12)) seq.gates.push_back(NativeGate::virtual_z(Subspace::s12, p2));
        return seq;
    }
};

// Re-expresses a segment unitary that acts within subspace s as a rotation by
// π/2 as Z_λ, one π/2 pulse, Z_φ plus phase bookkeeping.
inline NativeSequence single_pulse_segment(const CMatrix& m, Subspace s) {
    const auto [i, j] = subspace_levels(s);
    const int k = spectator_level(s);
    CMatrix block(2, 2);
    block << m(i, i), m(i, j), m(j, i), m(j, j);
    const auto p = two_level_parameters(block);
    NativeSequence seq;
    seq.gates.push_back(NativeGate::virtual_z(s, p.lambda));
    seq.gates.push_back(NativeGate::pulse(s, std::abs(p.theta - kPi / 2.0) < 1e-9 ? kPi / 2.0 : p.theta));
    seq.gates.push_back(NativeGate::virtual_z(s, p.phi));
    // block = g·U, spectator entry e^{iκ}: subspace phase relative to spectator is g·e^{−iκ}
    const double gamma = std::arg(p.global_phase) - std::arg(m(k, k));
    for (const auto& g : subspace_phase(s, gamma)) seq.gates.push_back(g);
    return seq;
}

inline bool is_half_pi(const NativeGate& g) { return g.is_pulse() && std::abs(g.angle - kPi / 2.0) < 1e-10; }

// One pass of the rewrite rules; returns true if anything changed.
inline bool optimize_pass(NativeSequence& seq) {
    bool changed = false;

    // Canonicalize virtual-Z runs and drop zero-angle gates.
    NativeSequence out;
    for (std::size_t i = 0; i < seq.gates.size();) {
        const auto& g = seq.gates[i];
        if (g.is_pulse()) {
            if (std::abs(g.angle) < 1e-12) {
                changed = true;
            } else {
                out.gates.push_back(g);
            }
            ++i;
            continue;
        }
        PhaseFrame frame;
        std::size_t j = i;
        while (j < seq.gates.size() && !seq.gates[j].is_pulse()) frame.add(seq.gates[j++]);
        const NativeSequence run = frame.gates();
        const bool same = run.gates.size() == j - i &&
                          std::equal(run.gates.begin(), run.gates.end(), seq.gates.begin() + static_cast<long>(i),
                                     [](const NativeGate& a, const NativeGate& b) {
                                         return a.subspace == b.subspace && std::abs(a.angle - b.angle) < 1e-15;
                                     });
        changed = changed || !same;
        out.append(run);
        i = j;
    }
    seq = std::move(out);

    // Pairs of π/2 pulses on the same subspace and axis, separated only by
    // virtual Z gates: relative phase 0 fuses into a π pulse, relative phase π
    // cancels the pulses (R D R = D).
    for (std::size_t i = 0; i < seq.gates.size(); ++i) {
        if (!is_half_pi(seq.gates[i])) continue;
        std::size_t j = i + 1;
        PhaseFrame between;
        while (j < seq.gates.size() && !seq.gates[j].is_pulse()) between.add(seq.gates[j++]);
        if (j >= seq.gates.size() || !is_half_pi(seq.gates[j])) continue;
        const NativeGate& a = seq.gates[i];
        const NativeGate& b = seq.gates[j];
        if (a.subspace != b.subspace || !angle_is(a.frame_phase, b.frame_phase)) continue;
        const double rel = between.relative(a.subspace);
        NativeSequence replacement;
        if (angle_is(rel, 0.0)) {
            replacement.gates.push_back(NativeGate::pulse(a.subspace, kPi, a.frame_phase));
            replacement.append(between.gates());
        } else if (angle_is(rel, kPi)) {
            replacement = between.gates();
        } else if (angle_is(rel, kPi / 2.0) || angle_is(rel, -kPi / 2.0)) {
            NativeSequence segment;
            segment.gates.assign(seq.gates.begin() + static_cast<long>(i), seq.gates.begin() + static_cast<long>(j + 1));
            replacement = single_pulse_segment(segment.unitary().matrix(), a.subspace);
        } else {
            continue;
        }
        NativeSequence rebuilt;
        rebuilt.gates.assign(seq.gates.begin(), seq.gates.begin() + static_cast<long>(i));
        rebuilt.append(replacement);
        rebuilt.gates.insert(rebuilt.gates.end(), seq.gates.begin() + static_cast<long>(j + 1), seq.gates.end());
        seq = std::move(rebuilt);
        return true;
    }
    return changed;
}

}  // namespace detail

/// Rewrites to a fixpoint without changing the unitary (up to global phase):
/// drops zero-angle rotations, merges virtual Z runs, fuses π/2 pulse pairs.
inline NativeSequence optimize_sequence(NativeSequence seq) {
    for (int iter = 0; iter < 1000 && detail::optimize_pass(seq); ++iter) {
    }
    return seq;
}

/// Removes every virtual Z by moving it to the end of the sequence, updating
/// the frame of the pulses it passes; the net diagonal is emitted last.
inline NativeSequence track_frames(const NativeSequence& seq) {
    NativeSequence out;
    detail::PhaseFrame frame;
    for (const auto& g : seq.gates) {
        if (!g.is_pulse()) {
            frame.add(g);
            continue;
        }
        NativeGate moved = g;
        moved.frame_phase = wrap_angle(g.frame_phase - frame.relative(g.subspace));
        out.gates.push_back(moved);
    }
    out.append(frame.gates());
    return out;
}

/// Compiles a unitary on a native subspace (01 or 12) with a single ZXZXZ.
inline NativeSequence compile_two_level(const CMatrix& block, Subspace s) {
    const auto p = two_level_parameters(block);
    return optimize_sequence(zxzxz(p.theta, p.phi, p.lambda, s));
}

/// General single-qutrit compilation: cosine-sine pattern, then optimization.
inline NativeSequence compile_unitary(const QuditMatrix& u) {
    NativeSequence seq = optimize_sequence(dita_decompose(u));
    if (!verifies(seq, u)) throw std::runtime_error("compile_unitary: compiled sequence does not verify");
    return seq;
}

/// The Hadamard recipe H = Y12(π/2)·Y01(θ)·diag(1,−1,−i)·Y12(π/2)·diag(1,1,−1).
/// `rotation_angle` is the Y01 angle θ in the half-angle convention.
struct HadamardRecipe {
    double rotation_angle = 0.0;
    NativeSequence sequence;

    /// Quoted recipe parameter α, for which the rotation block reads cos 2α / sin 2α.
    double alpha() const { return rotation_angle / 4.0; }
};

inline NativeSequence hadamard_recipe_sequence(double theta) {
    NativeSequence seq;
    seq.gates.push_back(NativeGate::virtual_z(Subspace::s12, kPi));
    seq.append(y_rotation(kPi / 2.0, Subspace::s12));
    seq.append(virtual_diag(kPi, -kPi / 2.0));
    // Y01(θ) = X_{π/2} Z_{π−θ} X_{π/2} Z_{−π}
    seq.gates.push_back(NativeGate::virtual_z(Subspace::s01, -kPi));
    seq.gates.push_back(NativeGate::pulse(Subspace::s01, kPi / 2.0));
    seq.gates.push_back(NativeGate::virtual_z(Subspace::s01, kPi - theta));
    seq.gates.push_back(NativeGate::pulse(Subspace::s01, kPi / 2.0));
    for (const auto& g : subspace_phase(Subspace::s01, theta / 2.0)) seq.gates.push_back(g);
    seq.append(y_rotation(kPi / 2.0, Subspace::s12));
    return seq;
}

/// Solves the recipe's |⟨0|·|0⟩| = |H00| constraint for θ by bisection and
/// verifies the full matrix.
inline HadamardRecipe solve_hadamard_recipe() {
    const double target = std::abs(hadamard()(0, 0));
    auto residual = [&](double theta) { return std::abs(hadamard_recipe_sequence(theta).unitary()(0, 0)) - target; };
    double lo = 0.0, hi = kPi;  // residual decreases from 1 - 1/√3 to -1/√3
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    HadamardRecipe recipe{0.5 * (lo + hi), {}};
    recipe.sequence = optimize_sequence(hadamard_recipe_sequence(recipe.rotation_angle));
    if (!verifies(recipe.sequence, QuditMatrix(hadamard())))
        throw std::runtime_error("Hadamard recipe does not reproduce H");
    return recipe;
}

struct PulseStats {
    double mean = 0.0;
    int min = 0;
    int max = 0;
};

/// Clifford table with one verified, optimized pulse sequence per element.
struct CompiledCliffordTable {
    CliffordTable table;
    std::vector<NativeSequence> sequences;
    PulseStats stats;

    const NativeSequence& sequence(std::size_t i) const { return sequences.at(i); }
};

inline PulseStats pulse_stats(const std::vector<NativeSequence>& seqs) {
    PulseStats s;
    if (seqs.empty()) return s;
    s.min = std::numeric_limits<int>::max();
    double total = 0.0;
    for (const auto& q : seqs) {
        const int c = q.pulse_count();
        total += c;
        s.min = std::min(s.min, c);
        s.max = std::max(s.max, c);
    }
    s.mean = total / static_cast<double>(seqs.size());
    return s;
}

inline CompiledCliffordTable compile_clifford_table(CliffordTable table) {
    std::vector<NativeSequence> seqs;
    seqs.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        NativeSequence seq = optimize_sequence(dita_decompose(table.matrix(i)));
        if (!verifies(seq, table.matrix(i)))
            throw std::runtime_error("Clifford " + std::to_string(i) + " failed verification after compilation");
        seqs.push_back(std::move(seq));
    }
    const PulseStats stats = pulse_stats(seqs);
    return {std::move(table), std::move(seqs), stats};
}

/// The qubit Clifford group embedded in one two-level subspace of a qutrit,
/// with compiled sequences. Native subspaces use ZXZXZ directly; the 02
/// subspace goes through the general qutrit compiler.
struct SubspaceCliffordTable {
    Subspace subspace = Subspace::s01;
    detail::PhaseFreeGroup group;
    std::vector<QuditMatrix> embedded;
    std::vector<NativeSequence> sequences;
};

inline SubspaceCliffordTable compile_subspace_clifford_table(Subspace s) {
    SubspaceCliffordTable t{s, generate_qubit_clifford_group(), {}, {}};
    for (const auto& block : t.group.elements()) {
        QuditMatrix u(embed_block(block, s));
        NativeSequence seq = s == Subspace::s02 ? compile_unitary(u) : compile_two_level(block, s);
        if (!verifies_on_subspace(seq, block, s))
            throw std::runtime_error("qubit Clifford failed verification in subspace " + to_string(s));
        t.embedded.push_back(std::move(u));
        t.sequences.push_back(std::move(seq));
    }
    return t;
}

}  // namespace qtrb
