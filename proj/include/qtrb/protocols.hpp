#pragma once

// Benchmarking experiments: qubit-like RB, qutrit RB, interleaved RB,
// simultaneous RB and cycle benchmarking. Each protocol expands a plan into
// independent (circuit, seed) jobs, runs them through an executor and
// aggregates per-depth decay records.

#include "algebra.hpp"
#include "compiler.hpp"
#include "estimator.hpp"
#include "groups.hpp"
#include "noise.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace qtrb {

/// Maps (circuit, shots, seed) to counts. Implementations must be safe to
/// call concurrently.
using Executor = std::function<MeasurementCounts(const Circuit&, std::uint64_t, std::uint64_t)>;

inline Executor simulator_executor(NoiseModel noise) {
    return [noise = std::move(noise)](const Circuit& c, std::uint64_t shots, std::uint64_t seed) {
        return simulate(c, noise, shots, seed);
    };
}

namespace detail {

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on a small worker pool; results are indexed by
/// job so the outcome does not depend on scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, unsigned threads = default_threads()) {
    std::vector<T> out(n);
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Plans and records

struct RbPlan {
    std::vector<int> depths;
    int sequences_per_depth = 30;
    std::uint64_t shots = 2000;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (depths.empty()) throw std::invalid_argument("plan needs at least one depth");
        for (std::size_t i = 0; i < depths.size(); ++i) {
            if (depths[i] < 1) throw std::invalid_argument("depths must be >= 1");
            if (i && depths[i] <= depths[i - 1]) throw std::invalid_argument("depths must be strictly increasing");
        }
        if (sequences_per_depth < 1) throw std::invalid_argument("sequences_per_depth must be >= 1");
        if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    }
    unsigned thread_count() const { return threads ? threads : detail::default_threads(); }
};

struct DecayPoint {
    int depth = 0;
    cplx value;
    double stderr_re = 0.0;
    double stderr_im = 0.0;
    int n = 0;
    bool valid = true;
    std::vector<double> samples;  // per-sequence real parts
};

struct DecayRecord {
    std::string channel;
    std::vector<DecayPoint> points;
    double stderr_floor = 0.0;

    /// Real parts of valid points weighted by inverse squared standard error.
    std::vector<FitPoint> fit_points() const {
        std::vector<FitPoint> out;
        for (const auto& p : points) {
            if (!p.valid) continue;
            const double s = std::max(p.stderr_re, stderr_floor);
            out.push_back({static_cast<double>(p.depth), p.value.real(), s > 0.0 ? 1.0 / (s * s) : 1.0});
        }
        return out;
    }
};

inline DecayFit fit_record(const DecayRecord& r, const FitOptions& opt = {}) {
    const auto pts = r.fit_points();
    return fit_exponential(pts, opt);
}

/// Bootstrap sigma of p from resampling the per-sequence samples of each depth.
inline double bootstrap_record_sigma_p(const DecayRecord& r, int resamples, std::uint64_t seed,
                                       const FitOptions& opt = {}) {
    std::vector<std::pair<double, std::vector<double>>> by_depth;
    for (const auto& p : r.points)
        if (p.valid) by_depth.push_back({static_cast<double>(p.depth), p.samples});
    return bootstrap_sigma_p(by_depth, resamples, seed, opt);
}

namespace detail {

inline DecayPoint aggregate(int depth, const std::vector<cplx>& vals) {
    DecayPoint p;
    p.depth = depth;
    p.n = static_cast<int>(vals.size());
    if (vals.empty()) {
        p.valid = false;
        return p;
    }
    cplx mean = 0.0;
    for (const auto& v : vals) {
        mean += v;
        p.samples.push_back(v.real());
    }
    mean /= static_cast<double>(vals.size());
    p.value = mean;
    if (vals.size() > 1) {
        double vr = 0.0, vi = 0.0;
        for (const auto& v : vals) {
            vr += (v.real() - mean.real()) * (v.real() - mean.real());
            vi += (v.imag() - mean.imag()) * (v.imag() - mean.imag());
        }
        const double n = static_cast<double>(vals.size());
        p.stderr_re = std::sqrt(vr / (n - 1.0) / n);
        p.stderr_im = std::sqrt(vi / (n - 1.0) / n);
    }
    return p;
}

inline double shot_floor(std::uint64_t shots, int n) {
    return 1.0 / (static_cast<double>(shots) * std::sqrt(static_cast<double>(std::max(n, 1))));
}

// Seed tags.
inline constexpr std::uint64_t kCliffordStream = 0x11;
inline constexpr std::uint64_t kQubitStream = 0x12;
inline constexpr std::uint64_t kSimultaneousStream = 0x13;
inline constexpr std::uint64_t kCbStream = 0x14;
inline constexpr std::uint64_t kShots = 0x21;

}  // namespace detail

// ---------------------------------------------------------------------------
// Shared tables

/// Compiled gate tables used by all protocols; built once on first use.
struct BenchmarkContext {
    CompiledCliffordTable cliffords;
    HadamardRecipe hadamard;
    std::array<SubspaceCliffordTable, 3> subspaces;
    std::array<NativeSequence, 9> paulis;  // indexed by 3x + z

    static const BenchmarkContext& instance() {
        static const BenchmarkContext ctx = build();
        return ctx;
    }

    const SubspaceCliffordTable& subspace(Subspace s) const { return subspaces[static_cast<int>(s)]; }

private:
    static BenchmarkContext build() {
        BenchmarkContext c{compile_clifford_table(generate_clifford_table()),
                           solve_hadamard_recipe(),
                           {compile_subspace_clifford_table(Subspace::s01), compile_subspace_clifford_table(Subspace::s12),
                            compile_subspace_clifford_table(Subspace::s02)},
                           {}};
        for (int x = 0; x < 3; ++x)
            for (int z = 0; z < 3; ++z) c.paulis[3 * x + z] = compile_unitary(pauli_matrix(PauliLabel::single(x, z)));
        return c;
    }
};

/// Table index of a named Clifford: "I", "X01", "X12", "H", "S" or a decimal index.
inline std::size_t named_clifford(const std::string& name, const CliffordTable& table) {
    if (name == "I") return table.identity_index();
    if (name == "X01") return clifford_lookup(QuditMatrix(level_exchange(Subspace::s01)), table);
    if (name == "X12") return clifford_lookup(QuditMatrix(level_exchange(Subspace::s12)), table);
    if (name == "H") return clifford_lookup(QuditMatrix(hadamard()), table);
    if (name == "S") return clifford_lookup(QuditMatrix(phase_s()), table);
    if (!name.empty() && std::all_of(name.begin(), name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
        const auto idx = std::stoull(name);
        if (idx >= table.size()) throw std::invalid_argument("Clifford index out of range: " + name);
        return static_cast<std::size_t>(idx);
    }
    throw std::invalid_argument("unknown Clifford '" + name + "'");
}

// ---------------------------------------------------------------------------
// Sequence generation

struct RbSequence {
    std::vector<std::size_t> gates;  // time order
    std::size_t inversion = 0;
};

/// Uniform random group elements plus the inverse of their ordered product.
/// `Group` needs size(), compose(i, j) (j first) and inverse(i).
template <class Group, class Rng>
RbSequence gen_rb_sequence(int depth, const Group& group, Rng& rng) {
    if (depth < 1) throw std::invalid_argument("gen_rb_sequence: depth must be >= 1");
    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
    RbSequence s;
    std::size_t acc = group.identity_index();
    for (int i = 0; i < depth; ++i) {
        const std::size_t g = pick(rng);
        s.gates.push_back(g);
        acc = group.compose(g, acc);
    }
    s.inversion = group.inverse(acc);
    return s;
}

/// Alternates random elements with a fixed gate; the inversion covers the full product.
template <class Group, class Rng>
RbSequence gen_interleaved_sequence(int depth, const Group& group, std::size_t interleaved, Rng& rng) {
    if (depth < 1) throw std::invalid_argument("gen_interleaved_sequence: depth must be >= 1");
    if (interleaved >= group.size()) throw std::invalid_argument("interleaved gate is not in the table");
    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
    RbSequence s;
    std::size_t acc = group.identity_index();
    for (int i = 0; i < depth; ++i) {
        const std::size_t g = pick(rng);
        s.gates.push_back(g);
        s.gates.push_back(interleaved);
        acc = group.compose(interleaved, group.compose(g, acc));
    }
    s.inversion = group.inverse(acc);
    return s;
}

// ---------------------------------------------------------------------------
// Circuit builders

/// Single-qutrit RB circuit on `qutrit` of an n-qutrit register. Each
/// Clifford is followed by a "clifford" barrier.
inline Circuit build_rb_circuit(const RbSequence& seq, int qutrit = 0, int n_qutrits = 1,
                                const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    Circuit c{n_qutrits, {}};
    for (std::size_t g : seq.gates) {
        c.add_sequence(qutrit, ctx.cliffords.sequence(g));
        c.add_barrier("clifford", {qutrit});
    }
    c.add_sequence(qutrit, ctx.cliffords.sequence(seq.inversion));
    c.add_barrier("clifford", {qutrit});
    return c;
}

/// Interleaved RB circuit: odd slots carry the fixed gate and an "interleaved"
/// barrier. The Hadamard uses the fixed recipe sequence.
inline Circuit build_interleaved_circuit(const RbSequence& seq, std::size_t interleaved,
                                         const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    const bool is_h = interleaved == named_clifford("H", ctx.cliffords.table);
    const NativeSequence& gate = is_h ? ctx.hadamard.sequence : ctx.cliffords.sequence(interleaved);
    Circuit c{1, {}};
    for (std::size_t i = 0; i < seq.gates.size(); ++i) {
        if (i % 2 == 1) {
            c.add_sequence(0, gate);
            c.add_barrier("interleaved", {0});
        } else {
            c.add_sequence(0, ctx.cliffords.sequence(seq.gates[i]));
            c.add_barrier("clifford", {0});
        }
    }
    c.add_sequence(0, ctx.cliffords.sequence(seq.inversion));
    c.add_barrier("clifford", {0});
    return c;
}

/// Lower level of the subspace, where the qubit-like sequence starts.
inline int qubit_like_initial_level(Subspace s) { return subspace_levels(s).first; }

inline Circuit build_qubit_like_circuit(const RbSequence& seq, Subspace s,
                                        const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    const auto& table = ctx.subspace(s);
    Circuit c{1, {}};
    if (qubit_like_initial_level(s) == 1) c.steps.push_back(PulseStep{0, NativeGate::pulse(Subspace::s01, kPi)});
    for (std::size_t g : seq.gates) {
        c.add_sequence(0, table.sequences.at(g));
        c.add_barrier("clifford", {0});
    }
    c.add_sequence(0, table.sequences.at(seq.inversion));
    c.add_barrier("clifford", {0});
    return c;
}

/// Parallel RB streams aligned per Clifford slot; each slot ends with one
/// "clifford" barrier over all driven qutrits.
inline Circuit build_simultaneous_circuit(const std::vector<RbSequence>& seqs, const std::vector<int>& qutrits,
                                          int n_qutrits, const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    if (seqs.size() != qutrits.size()) throw std::invalid_argument("one sequence per qutrit required");
    Circuit c{n_qutrits, {}};
    const std::size_t slots = seqs.front().gates.size() + 1;
    for (std::size_t k = 0; k < slots; ++k) {
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            if (seqs[i].gates.size() + 1 != slots) throw std::invalid_argument("streams must have equal depth");
            const std::size_t g = k + 1 < slots ? seqs[i].gates[k] : seqs[i].inversion;
            c.add_sequence(qutrits[i], ctx.cliffords.sequence(g));
        }
        c.add_barrier("clifford", qutrits);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Qutrit RB

/// ⟨Z⟩ = P0 + ω·P1 + ω²·P2 for a single-qutrit distribution.
inline cplx z_expectation(std::span<const double> p) {
    if (p.size() != 3) throw std::invalid_argument("z_expectation: expects 3 probabilities");
    return p[0] + omega(1) * p[1] + omega(2) * p[2];
}

struct QutritRbResult {
    DecayRecord z;                          // complex ⟨Z⟩
    std::array<DecayRecord, 3> populations;  // P0, P1, P2
};

namespace detail {

struct QutritSample {
    cplx z;
    std::array<double, 3> pops{};
};

inline QutritSample qutrit_sample(const MeasurementCounts& counts) {
    const auto f = counts.frequencies();
    return {z_expectation(f), {f[0], f[1], f[2]}};
}

inline QutritRbResult collect_qutrit(const RbPlan& plan, const std::vector<QutritSample>& samples, const std::string& prefix) {
    QutritRbResult r;
    r.z.channel = prefix + "Z";
    for (int k = 0; k < 3; ++k) r.populations[k].channel = prefix + "P" + std::to_string(k);
    const int n = plan.sequences_per_depth;
    for (std::size_t d = 0; d < plan.depths.size(); ++d) {
        std::vector<cplx> z;
        std::array<std::vector<cplx>, 3> pops;
        for (int s = 0; s < n; ++s) {
            const auto& q = samples[d * n + s];
            z.push_back(q.z);
            for (int k = 0; k < 3; ++k) pops[k].push_back(q.pops[k]);
        }
        r.z.points.push_back(aggregate(plan.depths[d], z));
        for (int k = 0; k < 3; ++k) r.populations[k].points.push_back(aggregate(plan.depths[d], pops[k]));
    }
    r.z.stderr_floor = shot_floor(plan.shots, n);
    for (auto& p : r.populations) p.stderr_floor = r.z.stderr_floor;
    return r;
}

template <class Build>
std::vector<QutritSample> run_single_qutrit_jobs(const RbPlan& plan, const Executor& exec, Build&& build) {
    const std::size_t n = plan.sequences_per_depth;
    return detail::parallel_map<QutritSample>(
        plan.depths.size() * n,
        [&](std::size_t job) {
            const std::size_t d = job / n, s = job % n;
            std::mt19937_64 rng(derive_seed(plan.master_seed, {kCliffordStream, d, s}));
            const Circuit c = build(plan.depths[d], rng);
            return qutrit_sample(exec(c, plan.shots, derive_seed(plan.master_seed, {kShots, kCliffordStream, d, s})));
        },
        plan.thread_count());
}

}  // namespace detail

inline QutritRbResult run_qutrit_rb(const RbPlan& plan, const Executor& exec,
                                    const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    plan.validate();
    const auto samples = detail::run_single_qutrit_jobs(plan, exec, [&](int depth, std::mt19937_64& rng) {
        return build_rb_circuit(gen_rb_sequence(depth, ctx.cliffords.table, rng), 0, 1, ctx);
    });
    return detail::collect_qutrit(plan, samples, "");
}

inline QutritRbResult run_qutrit_rb(const RbPlan& plan, const NoiseModel& noise) {
    noise.validate(1);
    return run_qutrit_rb(plan, simulator_executor(noise));
}

// ---------------------------------------------------------------------------
// Interleaved RB

struct InterleavedRbResult {
    std::size_t gate = 0;
    QutritRbResult reference;
    QutritRbResult interleaved;
};

/// Reference and interleaved runs share every random Clifford stream and shot seed.
inline InterleavedRbResult run_interleaved_rb(const RbPlan& plan, std::size_t gate, const Executor& exec,
                                              const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    plan.validate();
    if (gate >= ctx.cliffords.table.size()) throw std::invalid_argument("interleaved gate not in the Clifford table");
    InterleavedRbResult r;
    r.gate = gate;
    r.reference = run_qutrit_rb(plan, exec, ctx);
    const auto samples = detail::run_single_qutrit_jobs(plan, exec, [&](int depth, std::mt19937_64& rng) {
        return build_interleaved_circuit(gen_interleaved_sequence(depth, ctx.cliffords.table, gate, rng), gate, ctx);
    });
    r.interleaved = detail::collect_qutrit(plan, samples, "interleaved_");
    return r;
}

inline InterleavedRbResult run_interleaved_rb(const RbPlan& plan, std::size_t gate, const NoiseModel& noise) {
    noise.validate(1);
    return run_interleaved_rb(plan, gate, simulator_executor(noise));
}

// ---------------------------------------------------------------------------
// Qubit-like RB

struct QubitLikeRbResult {
    Subspace subspace = Subspace::s01;
    DecayRecord survival;  // P(i)/(P(i)+P(j))
    DecayRecord leakage;   // spectator population
};

inline QubitLikeRbResult run_qubit_like_rb(const RbPlan& plan, Subspace s, const Executor& exec,
                                           const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    plan.validate();
    const std::size_t n = plan.sequences_per_depth;
    const auto [lo, hi] = subspace_levels(s);
    const int spectator = spectator_level(s);
    const auto tag = static_cast<std::uint64_t>(s);
    struct Sample {
        std::optional<double> survival;
        double leakage = 0.0;
    };
    const auto samples = detail::parallel_map<Sample>(
        plan.depths.size() * n,
        [&](std::size_t job) {
            const std::size_t d = job / n, k = job % n;
            std::mt19937_64 rng(derive_seed(plan.master_seed, {detail::kQubitStream, tag, d, k}));
            const Circuit c = build_qubit_like_circuit(gen_rb_sequence(plan.depths[d], ctx.subspace(s).group, rng), s, ctx);
            const auto f =
                exec(c, plan.shots, derive_seed(plan.master_seed, {detail::kShots, detail::kQubitStream, tag, d, k}))
                    .frequencies();
            Sample out;
            const double denom = f[lo] + f[hi];
            if (denom > 0.0) out.survival = f[lo] / denom;
            out.leakage = f[spectator];
            return out;
        },
        plan.thread_count());

    QubitLikeRbResult r;
    r.subspace = s;
    r.survival.channel = "survival_" + to_string(s);
    r.leakage.channel = "leakage_" + to_string(s);
    for (std::size_t d = 0; d < plan.depths.size(); ++d) {
        std::vector<cplx> surv, leak;
        for (std::size_t k = 0; k < n; ++k) {
            const auto& q = samples[d * n + k];
            if (q.survival) surv.push_back(*q.survival);
            leak.push_back(q.leakage);
        }
        r.survival.points.push_back(detail::aggregate(plan.depths[d], surv));
        r.leakage.points.push_back(detail::aggregate(plan.depths[d], leak));
    }
    r.survival.stderr_floor = r.leakage.stderr_floor = detail::shot_floor(plan.shots, static_cast<int>(n));
    return r;
}

inline QubitLikeRbResult run_qubit_like_rb(const RbPlan& plan, Subspace s, const NoiseModel& noise) {
    noise.validate(1);
    return run_qubit_like_rb(plan, s, simulator_executor(noise));
}

// ---------------------------------------------------------------------------
// Simultaneous RB

struct SimultaneousRbResult {
    std::vector<int> qutrits;
    std::vector<DecayRecord> isolated;      // ⟨Z⟩ per qutrit, others idle
    std::vector<DecayRecord> simultaneous;  // ⟨Z⟩ per qutrit, all driven
};

/// Each qutrit keeps its own Clifford stream in both the isolated and the
/// simultaneous runs, so the two differ only by concurrent driving.
inline SimultaneousRbResult run_simultaneous_rb(const RbPlan& plan, const std::vector<int>& qutrits, int n_qutrits,
                                                const Executor& exec,
                                                const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    plan.validate();
    if (qutrits.size() < 2) throw std::invalid_argument("simultaneous RB needs at least 2 qutrits");
    for (std::size_t i = 0; i < qutrits.size(); ++i) {
        if (qutrits[i] < 0 || qutrits[i] >= n_qutrits) throw std::invalid_argument("qutrit index out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (qutrits[i] == qutrits[j]) throw std::invalid_argument("duplicate qutrit in simultaneous RB");
    }
    const std::size_t n = plan.sequences_per_depth;
    const std::size_t nq = qutrits.size();
    // Job layout: (depth, sequence, mode) with mode 0..nq-1 isolated, nq simultaneous.
    const std::size_t modes = nq + 1;
    const auto samples = detail::parallel_map<std::vector<cplx>>(
        plan.depths.size() * n * modes,
        [&](std::size_t job) {
            const std::size_t mode = job % modes, k = (job / modes) % n, d = job / (modes * n);
            std::vector<RbSequence> seqs;
            for (std::size_t i = 0; i < nq; ++i) {
                std::mt19937_64 rng(derive_seed(plan.master_seed, {detail::kSimultaneousStream, d, k, i}));
                seqs.push_back(gen_rb_sequence(plan.depths[d], ctx.cliffords.table, rng));
            }
            const Circuit c = mode < nq ? build_rb_circuit(seqs[mode], qutrits[mode], n_qutrits, ctx)
                                        : build_simultaneous_circuit(seqs, qutrits, n_qutrits, ctx);
            const auto counts =
                exec(c, plan.shots, derive_seed(plan.master_seed, {detail::kShots, detail::kSimultaneousStream, d, k, mode}));
            std::vector<cplx> z;
            for (std::size_t i = 0; i < nq; ++i) {
                if (mode < nq && mode != i) continue;
                z.push_back(z_expectation(counts.marginal(qutrits[i]).frequencies()));
            }
            return z;
        },
        plan.thread_count());

    SimultaneousRbResult r;
    r.qutrits = qutrits;
    const double floor = detail::shot_floor(plan.shots, static_cast<int>(n));
    for (std::size_t i = 0; i < nq; ++i) {
        DecayRecord iso{"Z_q" + std::to_string(qutrits[i]) + "_isolated", {}, floor};
        DecayRecord sim{"Z_q" + std::to_string(qutrits[i]) + "_simultaneous", {}, floor};
        for (std::size_t d = 0; d < plan.depths.size(); ++d) {
            std::vector<cplx> a, b;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t base = (d * n + k) * modes;
                a.push_back(samples[base + i].front());
                b.push_back(samples[base + nq][i]);
            }
            iso.points.push_back(detail::aggregate(plan.depths[d], a));
            sim.points.push_back(detail::aggregate(plan.depths[d], b));
        }
        r.isolated.push_back(std::move(iso));
        r.simultaneous.push_back(std::move(sim));
    }
    return r;
}

inline SimultaneousRbResult run_simultaneous_rb(const RbPlan& plan, const std::vector<int>& qutrits, int n_qutrits,
                                                const NoiseModel& noise) {
    noise.validate(n_qutrits);
    return run_simultaneous_rb(plan, qutrits, n_qutrits, simulator_executor(noise));
}

// ---------------------------------------------------------------------------
// Pauli measurement

enum class PauliBasis { Z, X, Y, V };

inline std::string to_string(PauliBasis b) {
    switch (b) {
        case PauliBasis::Z: return "Z";
        case PauliBasis::X: return "X";
        case PauliBasis::Y: return "Y";
        case PauliBasis::V: return "V";
    }
    return "?";
}

inline PauliBasis parse_pauli_basis(const std::string& s) {
    if (s == "Z") return PauliBasis::Z;
    if (s == "X") return PauliBasis::X;
    if (s == "Y") return PauliBasis::Y;
    if (s == "V") return PauliBasis::V;
    throw std::invalid_argument("unknown Pauli basis '" + s + "' (expected Z, X, Y or V)");
}

/// Rotation B with columns forming an eigenbasis of the basis' Pauli:
/// Z → I, X → H, Y (= ZX) and V (= Z²X) → circulant matrices with one ω or ω².
inline CMatrix basis_rotation(PauliBasis b) {
    const cplx w = omega(1), w2 = omega(2);
    CMatrix m(3, 3);
    switch (b) {
        case PauliBasis::Z: return CMatrix::Identity(3, 3);
        case PauliBasis::X: return hadamard();
        case PauliBasis::Y: m << 1.0, 1.0, w2, 1.0, w2, 1.0, w2, 1.0, 1.0; break;
        case PauliBasis::V: m << 1.0, 1.0, w, 1.0, w, 1.0, w, 1.0, 1.0; break;
    }
    return m / std::sqrt(3.0);
}

/// Single-qutrit Pauli exponents (x, z) diagonal in the basis, for power k.
inline std::pair<int, int> basis_pauli(PauliBasis b, int k) {
    switch (b) {
        case PauliBasis::Z: return {0, mod3(k)};
        case PauliBasis::X: return {mod3(k), 0};
        case PauliBasis::Y: return {mod3(k), mod3(k)};
        case PauliBasis::V: return {mod3(k), mod3(2 * k)};
    }
    return {0, 0};
}

/// The unique basis diagonalizing X^x Z^z; identity maps to Z.
inline PauliBasis diagonal_basis(int x, int z) {
    x = mod3(x);
    z = mod3(z);
    if (x == 0) return PauliBasis::Z;
    if (z == 0) return PauliBasis::X;
    return z == x ? PauliBasis::Y : PauliBasis::V;
}

inline std::vector<PauliBasis> diagonal_basis(const PauliLabel& q) {
    std::vector<PauliBasis> out;
    for (int i = 0; i < q.n_qutrits(); ++i) out.push_back(diagonal_basis(q.x[i], q.z[i]));
    return out;
}

/// Tensor product of per-qutrit basis rotations (qutrit 0 most significant).
inline QuditMatrix prepare_pauli_eigenstate(const std::vector<PauliBasis>& basis) {
    if (basis.empty()) throw std::invalid_argument("prepare_pauli_eigenstate: empty basis");
    CMatrix m = basis_rotation(basis.front());
    for (std::size_t i = 1; i < basis.size(); ++i) m = detail::kron(m, basis_rotation(basis[i]));
    return QuditMatrix(std::move(m));
}

/// Eigenvalues of Q in the basis, indexed by outcome; throws if Q is not diagonal there.
inline std::vector<cplx> pauli_eigenvalues(const PauliLabel& q, const std::vector<PauliBasis>& basis) {
    if (static_cast<int>(basis.size()) != q.n_qutrits()) throw std::invalid_argument("basis size mismatch");
    const CMatrix b = prepare_pauli_eigenstate(basis).matrix();
    const CMatrix w = b.adjoint() * pauli_matrix(q).matrix() * b;
    const CMatrix off = w - CMatrix(w.diagonal().asDiagonal());
    if (max_abs(off) > 1e-10) throw std::invalid_argument("Pauli " + q.name() + " is not diagonal in the chosen basis");
    std::vector<cplx> out(static_cast<std::size_t>(w.rows()));
    for (Index i = 0; i < w.rows(); ++i) out[static_cast<std::size_t>(i)] = w(i, i);
    return out;
}

struct PauliEstimate {
    cplx value;      // Tr[Qρ]
    cplx conjugate;  // Tr[Q†ρ]
};

/// Weighted sum Σ_z λ_z Pr(z|Q) over outcomes measured after B†.
inline PauliEstimate pauli_expectation(std::span<const double> probs, const PauliLabel& q,
                                       const std::vector<PauliBasis>& basis) {
    const auto lambda = pauli_eigenvalues(q, basis);
    if (probs.size() != lambda.size()) throw std::invalid_argument("distribution size mismatch");
    cplx v = 0.0;
    for (std::size_t z = 0; z < probs.size(); ++z) v += lambda[z] * probs[z];
    return {v, std::conj(v)};
}

inline PauliEstimate pauli_expectation(const MeasurementCounts& counts, const PauliLabel& q,
                                       const std::vector<PauliBasis>& basis) {
    const auto f = counts.frequencies();
    return pauli_expectation(f, q, basis);
}

/// |i, j⟩ → |i, i + j mod 3⟩, control first.
inline QuditMatrix csum_matrix() {
    CMatrix m = CMatrix::Zero(9, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(3 * i + (i + j) % 3, 3 * i + j) = 1.0;
    return QuditMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Cycle benchmarking

struct CbPlan {
    std::string cycle_name = "csum";
    QuditMatrix cycle = csum_matrix();
    std::vector<std::vector<PauliBasis>> settings;  // empty: all 4^n
    std::vector<int> depths{2, 4, 8, 16};
    int randomizations = 20;
    std::uint64_t shots = 2000;
    std::uint64_t master_seed = 0;
    bool compile_basis_rotations = false;
    unsigned threads = 0;

    int n_qutrits() const { return cycle.n_qutrits(); }

    std::vector<std::vector<PauliBasis>> effective_settings() const {
        if (!settings.empty()) return settings;
        std::vector<std::vector<PauliBasis>> out;
        const int n = n_qutrits();
        std::size_t total = 1;
        for (int i = 0; i < n; ++i) total *= 4;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::vector<PauliBasis> s(n);
            std::size_t t = idx;
            for (int q = n - 1; q >= 0; --q) {
                s[q] = static_cast<PauliBasis>(t % 4);
                t /= 4;
            }
            out.push_back(s);
        }
        return out;
    }

    void validate() const {
        RbPlan{depths, randomizations, shots, master_seed}.validate();
        for (const auto& s : settings)
            if (static_cast<int>(s.size()) != n_qutrits()) throw std::invalid_argument("basis setting size mismatch");
    }
};

/// Non-identity Paulis diagonal in a basis setting, one per {Q, Q†} pair.
inline std::vector<PauliLabel> setting_channels(const std::vector<PauliBasis>& setting) {
    const int n = static_cast<int>(setting.size());
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    std::vector<PauliLabel> out;
    for (std::size_t idx = 1; idx < total; ++idx) {
        std::vector<int> xs(n), zs(n);
        std::size_t t = idx;
        for (int q = n - 1; q >= 0; --q) {
            std::tie(xs[q], zs[q]) = basis_pauli(setting[q], static_cast<int>(t % 3));
            t /= 3;
        }
        const PauliLabel l(xs, zs);
        if (conjugate_pair_representative(l) == l) out.push_back(l);
    }
    return out;
}

struct CbResult {
    std::string cycle_name;
    int n_qutrits = 2;
    std::map<PauliLabel, DecayRecord> channels;  // keyed by representative
};

inline Circuit build_cb_circuit(const CbPlan& plan, const std::vector<PauliBasis>& prep,
                                const std::vector<PauliLabel>& layers, const std::vector<PauliBasis>& meas,
                                const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    const int n = plan.n_qutrits();
    Circuit c{n, {}};
    std::vector<int> all(n);
    for (int q = 0; q < n; ++q) all[q] = q;
    auto rotate = [&](const std::vector<PauliBasis>& basis, bool adjoint) {
        if (plan.compile_basis_rotations) {
            for (int q = 0; q < n; ++q) {
                const CMatrix b = basis_rotation(basis[q]);
                c.add_sequence(q, compile_unitary(QuditMatrix(adjoint ? CMatrix(b.adjoint()) : b)));
            }
        } else {
            const CMatrix b = prepare_pauli_eigenstate(basis).matrix();
            c.add_matrix(all, adjoint ? CMatrix(b.adjoint()) : b);
        }
    };
    rotate(prep, false);
    for (const auto& p : layers) {
        for (int q = 0; q < n; ++q) c.add_sequence(q, ctx.paulis[3 * p.x[q] + p.z[q]]);
        c.add_barrier("pauli", all);
        c.add_matrix(all, plan.cycle.matrix());
        c.add_barrier("cycle", all);
    }
    rotate(meas, true);
    return c;
}

/// Propagates Q through Pauli layers and cycles; returns the phased final label.
inline PauliLabel propagate_pauli(const PauliLabel& q, const std::vector<PauliLabel>& layers, const PauliFrameMap& cycle) {
    PauliLabel cur = q;
    for (const auto& p : layers) {
        cur = pauli_mul(pauli_mul(p, cur), pauli_adjoint(p));
        cur = cycle.apply(cur);
    }
    return cur;
}

/// Channel values φ̄·⟨Q_f⟩ normalized by the ideal initial expectation,
/// per representative Q, averaged over randomizations and basis settings.
inline CbResult run_cycle_benchmarking(const CbPlan& plan, const Executor& exec,
                                       const BenchmarkContext& ctx = BenchmarkContext::instance()) {
    plan.validate();
    const int n = plan.n_qutrits();
    const PauliFrameMap frame(plan.cycle);  // throws for a non-Clifford cycle
    const auto settings = plan.effective_settings();
    const std::size_t nd = plan.depths.size(), nr = plan.randomizations;

    using Sample = std::vector<std::pair<PauliLabel, cplx>>;
    const auto samples = detail::parallel_map<Sample>(
        settings.size() * nd * nr,
        [&](std::size_t job) {
            const std::size_t r = job % nr, d = (job / nr) % nd, s = job / (nr * nd);
            const auto& setting = settings[s];
            std::mt19937_64 rng(derive_seed(plan.master_seed, {detail::kCbStream, s, d, r}));
            std::vector<PauliLabel> layers;
            for (int m = 0; m < plan.depths[d]; ++m) layers.push_back(random_pauli(n, rng));

            // Group channels by the measurement basis of their final Pauli.
            std::map<std::vector<int>, std::vector<std::pair<PauliLabel, PauliLabel>>> by_basis;
            for (const auto& q : setting_channels(setting)) {
                const PauliLabel qf = propagate_pauli(q, layers, frame);
                std::vector<int> key;
                for (auto b : diagonal_basis(qf)) key.push_back(static_cast<int>(b));
                by_basis[key].push_back({q, qf});
            }
            Sample out;
            std::uint64_t group = 0;
            for (const auto& [key, items] : by_basis) {
                std::vector<PauliBasis> meas;
                for (int b : key) meas.push_back(static_cast<PauliBasis>(b));
                const Circuit c = build_cb_circuit(plan, setting, layers, meas, ctx);
                const auto counts =
                    exec(c, plan.shots, derive_seed(plan.master_seed, {detail::kShots, detail::kCbStream, s, d, r, group++}));
                const auto f = counts.frequencies();
                for (const auto& [q, qf] : items) {
                    const cplx ideal0 = pauli_eigenvalues(q, setting).front();
                    // U Q U† = ω^c Q_f, so Tr[Q_f ρ] ideally equals ω^{−c}·λ₀.
                    const cplx expected = std::conj(omega(qf.phase)) * ideal0;
                    const cplx est = pauli_expectation(f, qf.unphased(), meas).value;
                    out.push_back({q, est / expected});
                }
            }
            return out;
        },
        plan.threads ? plan.threads : detail::default_threads());

    CbResult res;
    res.cycle_name = plan.cycle_name;
    res.n_qutrits = n;
    std::map<PauliLabel, std::vector<std::vector<cplx>>> values;
    for (std::size_t job = 0; job < samples.size(); ++job) {
        const std::size_t d = (job / nr) % nd;
        for (const auto& [q, v] : samples[job]) {
            auto& per_depth = values[q];
            if (per_depth.empty()) per_depth.resize(nd);
            per_depth[d].push_back(v);
        }
    }
    for (const auto& [q, per_depth] : values) {
        DecayRecord rec;
        rec.channel = q.name();
        for (std::size_t d = 0; d < nd; ++d) rec.points.push_back(detail::aggregate(plan.depths[d], per_depth[d]));
        rec.stderr_floor = detail::shot_floor(plan.shots, rec.points.front().n);
        res.channels.emplace(q, std::move(rec));
    }
    return res;
}

inline CbResult run_cycle_benchmarking(const CbPlan& plan, const NoiseModel& noise) {
    noise.validate(plan.n_qutrits());
    return run_cycle_benchmarking(plan, simulator_executor(noise));
}

struct CbSummary {
    std::map<PauliLabel, DecayFit> fits;
    double process_fidelity = 1.0;
    double process_fidelity_sigma = 0.0;
    double average_gate_fidelity = 1.0;
};

/// Fits each channel as A·p^m (B fixed at 0) on the real part, then averages
/// the decays into the process fidelity.
inline CbSummary summarize_cb(const CbResult& r) {
    CbSummary s;
    std::map<PauliLabel, double> ps, sigmas;
    FitOptions opt;
    opt.fixed_B = 0.0;
    for (const auto& [q, rec] : r.channels) {
        const auto f = fit_record(rec, opt);
        s.fits.emplace(q, f);
        ps[q] = f.p;
        sigmas[q] = f.sigma_p;
    }
    s.process_fidelity = process_fidelity(ps, r.n_qutrits);
    s.process_fidelity_sigma = process_fidelity_sigma(sigmas, r.n_qutrits);
    s.average_gate_fidelity = average_gate_fidelity(s.process_fidelity, static_cast<int>(ipow3(r.n_qutrits)));
    return s;
}

}  // namespace qtrb
