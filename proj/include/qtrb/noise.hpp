#pragma once

// Density-matrix simulation of native-gate circuits under a location-bound
// noise model.
//
// Evolution order per step:
//   physical pulse  ideal pulse, crosstalk on spectators, then per-pulse
//                   channels in binding order
//   virtual Z       ideal only (noiseless)
//   matrix step     ideal only
//   barrier         channels bound to the barrier label, in binding order
// Readout applies the confusion matrix to the final populations before
// multinomial sampling.

#include "algebra.hpp"
#include "compiler.hpp"
#include "groups.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qtrb {

struct Depolarizing {
    double lambda = 0.0;
    std::optional<Subspace> subspace;  // restrict to a two-level subspace
};
struct AmplitudeDamping {
    double gamma1 = 0.0;  // |1⟩ → |0⟩
    double gamma2 = 0.0;  // |2⟩ → |1⟩
};
struct Dephasing {
    double lambda = 0.0;
};
struct CoherentOverrotation {
    double epsilon = 0.0;
    Subspace subspace = Subspace::s01;
};
/// Coherent |1⟩ ↔ |2⟩ coupling exp(−iδ/2 σx^{(12)}).
struct LeakageDrive {
    double delta = 0.0;
};

using ChannelSpec = std::variant<Depolarizing, AmplitudeDamping, Dephasing, CoherentOverrotation, LeakageDrive>;

inline std::string channel_kind(const ChannelSpec& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Depolarizing>) return "depolarizing";
            else if constexpr (std::is_same_v<T, AmplitudeDamping>) return "amplitude_damping";
            else if constexpr (std::is_same_v<T, Dephasing>) return "dephasing";
            else if constexpr (std::is_same_v<T, CoherentOverrotation>) return "coherent_overrotation";
            else return "leakage_drive";
        },
        c);
}

namespace detail {

inline void require_probability(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

// Operator on the two levels of s, zero elsewhere.
inline CMatrix subspace_operator(const CMatrix& block, Subspace s) {
    const auto [i, j] = subspace_levels(s);
    CMatrix out = CMatrix::Zero(3, 3);
    out(i, i) = block(0, 0);
    out(i, j) = block(0, 1);
    out(j, i) = block(1, 0);
    out(j, j) = block(1, 1);
    return out;
}

}  // namespace detail

/// Kraus operators of a channel acting on `n_qutrits` qutrits. Only the
/// unrestricted depolarizing channel supports n_qutrits > 1.
inline std::vector<CMatrix> channel_kraus(const ChannelSpec& spec, int n_qutrits = 1) {
    if (n_qutrits < 1) throw std::invalid_argument("channel_kraus: n_qutrits must be >= 1");
    const bool single = n_qutrits == 1;
    return std::visit(
        [&](const auto& c) -> std::vector<CMatrix> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Depolarizing>) {
                detail::require_probability(c.lambda, "depolarizing lambda");
                if (c.subspace) {
                    if (!single) throw std::invalid_argument("subspace depolarizing acts on one qutrit");
                    const int k = spectator_level(*c.subspace);
                    CMatrix spectator = CMatrix::Zero(3, 3);
                    spectator(k, k) = 1.0;
                    CMatrix id(2, 2), x(2, 2), y(2, 2), z(2, 2);
                    id << 1, 0, 0, 1;
                    x << 0, 1, 1, 0;
                    y << 0, cplx(0, -1), cplx(0, 1), 0;
                    z << 1, 0, 0, -1;
                    std::vector<CMatrix> out;
                    out.push_back(std::sqrt(1.0 - 0.75 * c.lambda) * detail::subspace_operator(id, *c.subspace) +
                                  spectator);
                    if (c.lambda > 0.0)
                        for (const auto& p : {x, y, z})
                            out.push_back(std::sqrt(c.lambda / 4.0) * detail::subspace_operator(p, *c.subspace));
                    return out;
                }
                const auto paulis = all_paulis(n_qutrits);
                const double n_ops = static_cast<double>(paulis.size());
                std::vector<CMatrix> out;
                const Index d = ipow3(n_qutrits);
                out.push_back(std::sqrt(1.0 - c.lambda + c.lambda / n_ops) * CMatrix::Identity(d, d));
                if (c.lambda > 0.0)
                    for (std::size_t i = 1; i < paulis.size(); ++i)
                        out.push_back(std::sqrt(c.lambda / n_ops) * pauli_matrix(paulis[i]).matrix());
                return out;
            } else {
                if (!single) throw std::invalid_argument(channel_kind(spec) + " acts on one qutrit");
                if constexpr (std::is_same_v<T, AmplitudeDamping>) {
                    detail::require_probability(c.gamma1, "amplitude damping gamma1");
                    detail::require_probability(c.gamma2, "amplitude damping gamma2");
                    CMatrix k0 = CMatrix::Zero(3, 3), k1 = CMatrix::Zero(3, 3), k2 = CMatrix::Zero(3, 3);
                    k0(0, 0) = 1.0;
                    k0(1, 1) = std::sqrt(1.0 - c.gamma1);
                    k0(2, 2) = std::sqrt(1.0 - c.gamma2);
                    k1(0, 1) = std::sqrt(c.gamma1);
                    k2(1, 2) = std::sqrt(c.gamma2);
                    return {k0, k1, k2};
                } else if constexpr (std::is_same_v<T, Dephasing>) {
                    detail::require_probability(c.lambda, "dephasing lambda");
                    std::vector<CMatrix> out{std::sqrt(1.0 - c.lambda) * CMatrix::Identity(3, 3)};
                    for (int k = 0; k < 3; ++k) {
                        CMatrix p = CMatrix::Zero(3, 3);
                        p(k, k) = std::sqrt(c.lambda);
                        out.push_back(p);
                    }
                    return out;
                } else if constexpr (std::is_same_v<T, CoherentOverrotation>) {
                    if (!std::isfinite(c.epsilon)) throw std::invalid_argument("overrotation epsilon must be finite");
                    return {embed_subspace_unitary(c.epsilon, 0.0, 0.0, c.subspace).matrix()};
                } else {
                    if (!std::isfinite(c.delta)) throw std::invalid_argument("leakage delta must be finite");
                    return {embed_subspace_unitary(c.delta, 0.0, 0.0, Subspace::s12).matrix()};
                }
            }
        },
        spec);
}

/// Location label for per-pulse noise; every other label names a barrier.
inline const std::string kPulseLocation = "pulse";

struct NoiseBinding {
    std::string location;
    ChannelSpec channel;
    std::vector<int> qutrits;                // empty: every qutrit the location touches
    std::optional<Subspace> pulse_subspace;  // per-pulse only: react to this subspace only
    bool joint = false;                      // one channel across all target qutrits
};

/// Classical drive crosstalk: a pulse of angle θ on `source` rotates `target`
/// by ε·θ/π about the same subspace axis.
struct CrosstalkCoupling {
    int source = 0;
    int target = 1;
    double epsilon = 0.0;
};

struct NoiseModel {
    std::vector<NoiseBinding> bindings;
    std::vector<CrosstalkCoupling> crosstalk;
    std::optional<ChannelSpec> spam_prep;
    /// Row-stochastic readout matrix, P(read j | true i) = C(i, j); either
    /// 3×3 (applied per qutrit) or 3^n×3^n.
    std::optional<Eigen::MatrixXd> confusion;

    NoiseModel& bind(std::string location, ChannelSpec channel, std::vector<int> qutrits = {}) {
        bindings.push_back({std::move(location), std::move(channel), std::move(qutrits), std::nullopt, false});
        return *this;
    }

    /// Throws on invalid parameters for an n-qutrit register.
    void validate(int n_qutrits) const {
        for (const auto& b : bindings) {
            if (b.location.empty()) throw std::invalid_argument("noise binding has an empty location");
            for (int q : b.qutrits)
                if (q < 0 || q >= n_qutrits) throw std::invalid_argument("noise binding qutrit out of range");
            const int width = b.joint ? static_cast<int>(b.qutrits.empty() ? n_qutrits : b.qutrits.size()) : 1;
            const auto kraus = channel_kraus(b.channel, width);
            require_trace_preserving(kraus);
        }
        for (const auto& c : crosstalk) {
            if (c.source < 0 || c.source >= n_qutrits || c.target < 0 || c.target >= n_qutrits)
                throw std::invalid_argument("crosstalk qutrit out of range");
            if (c.source == c.target) throw std::invalid_argument("crosstalk source equals target");
            if (!std::isfinite(c.epsilon)) throw std::invalid_argument("crosstalk epsilon must be finite");
        }
        if (spam_prep) require_trace_preserving(channel_kraus(*spam_prep, 1));
        if (confusion) {
            const auto& c = *confusion;
            if (c.rows() != c.cols() || (c.rows() != 3 && c.rows() != ipow3(n_qutrits)))
                throw std::invalid_argument("confusion matrix must be 3x3 or 3^n x 3^n");
            if (c.minCoeff() < 0.0) throw std::invalid_argument("confusion matrix has negative entries");
            for (Index r = 0; r < c.rows(); ++r)
                if (std::abs(c.row(r).sum() - 1.0) > 1e-12)
                    throw std::invalid_argument("confusion matrix rows must sum to 1");
        }
    }
};

/// Symmetric readout error: each level is misread as each other level with
/// probability eps/2.
inline Eigen::MatrixXd readout_misassignment(double eps) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, eps / 2.0);
    c.diagonal().setConstant(1.0 - eps);
    return c;
}

struct PulseStep {
    int qutrit = 0;
    NativeGate gate;
};

/// Ideal (noiseless) operator on the listed qutrits, first listed most significant.
struct MatrixStep {
    std::vector<int> qutrits;
    CMatrix op;
};

struct Barrier {
    std::string label;
    std::vector<int> qutrits;
};

using CircuitStep = std::variant<PulseStep, MatrixStep, Barrier>;

struct Circuit {
    int n_qutrits = 1;
    std::vector<CircuitStep> steps;

    void add_sequence(int qutrit, const NativeSequence& seq) {
        for (const auto& g : seq.gates) steps.push_back(PulseStep{qutrit, g});
    }
    void add_matrix(std::vector<int> qutrits, CMatrix op) { steps.push_back(MatrixStep{std::move(qutrits), std::move(op)}); }
    void add_barrier(std::string label, std::vector<int> qutrits) {
        steps.push_back(Barrier{std::move(label), std::move(qutrits)});
    }

    int pulse_count() const {
        int n = 0;
        for (const auto& s : steps)
            if (const auto* p = std::get_if<PulseStep>(&s); p && p->gate.is_pulse()) ++n;
        return n;
    }

    /// Throws on out-of-range qutrits, malformed matrices or empty barriers.
    void validate() const {
        if (n_qutrits < 1) throw std::invalid_argument("circuit needs at least one qutrit");
        auto check = [&](int q) {
            if (q < 0 || q >= n_qutrits) throw std::invalid_argument("circuit qutrit index out of range");
        };
        for (const auto& s : steps) {
            if (const auto* p = std::get_if<PulseStep>(&s)) {
                check(p->qutrit);
                if (p->gate.subspace == Subspace::s02) throw std::invalid_argument("native gate on subspace 02");
            } else if (const auto* m = std::get_if<MatrixStep>(&s)) {
                if (m->qutrits.empty()) throw std::invalid_argument("matrix step without qutrits");
                for (int q : m->qutrits) check(q);
                if (m->op.rows() != ipow3(static_cast<int>(m->qutrits.size())) || m->op.cols() != m->op.rows())
                    throw std::invalid_argument("matrix step dimension does not match its qutrits");
                for (std::size_t a = 0; a < m->qutrits.size(); ++a)
                    for (std::size_t b = a + 1; b < m->qutrits.size(); ++b)
                        if (m->qutrits[a] == m->qutrits[b]) throw std::invalid_argument("matrix step repeats a qutrit");
            } else {
                const auto& b = std::get<Barrier>(s);
                if (b.label.empty() || b.label == kPulseLocation) throw std::invalid_argument("invalid barrier label");
                for (int q : b.qutrits) check(q);
            }
        }
    }
};

/// Lifts an operator on `qutrits` (first listed most significant) to the full register.
inline CMatrix embed_operator(const CMatrix& op, const std::vector<int>& qutrits, int n_qutrits) {
    const int k = static_cast<int>(qutrits.size());
    if (k == 1) return embed_single(op, qutrits.front(), n_qutrits);
    const Index d = ipow3(n_qutrits);
    CMatrix out = CMatrix::Zero(d, d);
    std::vector<int> digits(n_qutrits);
    for (Index col = 0; col < d; ++col) {
        for (int q = 0; q < n_qutrits; ++q) digits[q] = outcome_digit(col, q, n_qutrits);
        Index sub_col = 0;
        for (int q : qutrits) sub_col = sub_col * 3 + digits[q];
        for (Index sub_row = 0; sub_row < op.rows(); ++sub_row) {
            const cplx a = op(sub_row, sub_col);
            if (a == cplx(0.0, 0.0)) continue;
            std::vector<int> rd = digits;
            Index t = sub_row;
            for (int i = k - 1; i >= 0; --i) {
                rd[qutrits[i]] = static_cast<int>(t % 3);
                t /= 3;
            }
            Index row = 0;
            for (int q = 0; q < n_qutrits; ++q) row = row * 3 + rd[q];
            out(row, col) += a;
        }
    }
    return out;
}

/// Noiseless product of every gate and matrix step (barriers ignored).
inline QuditMatrix ideal_unitary(const Circuit& circuit) {
    circuit.validate();
    const Index d = ipow3(circuit.n_qutrits);
    CMatrix u = CMatrix::Identity(d, d);
    for (const auto& s : circuit.steps) {
        if (const auto* p = std::get_if<PulseStep>(&s))
            u = embed_single(p->gate.matrix(), p->qutrit, circuit.n_qutrits) * u;
        else if (const auto* m = std::get_if<MatrixStep>(&s))
            u = embed_operator(m->op, m->qutrits, circuit.n_qutrits) * u;
    }
    return QuditMatrix(std::move(u));
}

namespace detail {

class Evolver {
public:
    Evolver(int n, const NoiseModel& noise) : n_(n), noise_(noise) {
        noise.validate(n);
        for (const auto& b : noise.bindings) {
            const int width = b.joint ? static_cast<int>(b.qutrits.empty() ? n : b.qutrits.size()) : 1;
            kraus_.push_back(channel_kraus(b.channel, width));
        }
        const Index d = ipow3(n);
        rho_ = CMatrix::Zero(d, d);
        rho_(0, 0) = 1.0;
        if (noise.spam_prep) {
            const auto k = channel_kraus(*noise.spam_prep, 1);
            for (int q = 0; q < n; ++q) apply_channel(k, {q});
        }
    }

    void step(const CircuitStep& s) {
        if (const auto* p = std::get_if<PulseStep>(&s)) {
            apply_unitary(embed_single(p->gate.matrix(), p->qutrit, n_));
            if (!p->gate.is_pulse()) return;
            for (const auto& c : noise_.crosstalk) {
                if (c.source != p->qutrit || c.epsilon == 0.0) continue;
                const auto leak = NativeGate::pulse(p->gate.subspace, c.epsilon * p->gate.angle / kPi, p->gate.frame_phase);
                apply_unitary(embed_single(leak.matrix(), c.target, n_));
            }
            for (std::size_t i = 0; i < noise_.bindings.size(); ++i) {
                const auto& b = noise_.bindings[i];
                if (b.location != kPulseLocation) continue;
                if (b.pulse_subspace && *b.pulse_subspace != p->gate.subspace) continue;
                if (!b.qutrits.empty() && std::find(b.qutrits.begin(), b.qutrits.end(), p->qutrit) == b.qutrits.end())
                    continue;
                apply_channel(kraus_[i], {p->qutrit});
            }
        } else if (const auto* m = std::get_if<MatrixStep>(&s)) {
            apply_unitary(embed_operator(m->op, m->qutrits, n_));
        } else {
            const auto& bar = std::get<Barrier>(s);
            for (std::size_t i = 0; i < noise_.bindings.size(); ++i) {
                const auto& b = noise_.bindings[i];
                if (b.location != bar.label) continue;
                std::vector<int> targets;
                for (int q : bar.qutrits)
                    if (b.qutrits.empty() || std::find(b.qutrits.begin(), b.qutrits.end(), q) != b.qutrits.end())
                        targets.push_back(q);
                if (targets.empty()) continue;
                if (b.joint) {
                    if (static_cast<Index>(ipow3(static_cast<int>(targets.size()))) != kraus_[i].front().rows())
                        throw std::invalid_argument("joint channel width does not match barrier qutrits");
                    apply_channel(kraus_[i], targets);
                } else {
                    for (int q : targets) apply_channel(kraus_[i], {q});
                }
            }
        }
    }

    const CMatrix& rho() const { return rho_; }

private:
    void apply_unitary(const CMatrix& u) { rho_ = u * rho_ * u.adjoint(); }

    void apply_channel(const std::vector<CMatrix>& kraus, const std::vector<int>& qutrits) {
        CMatrix out = CMatrix::Zero(rho_.rows(), rho_.cols());
        for (const auto& k : kraus) {
            const CMatrix full = embed_operator(k, qutrits, n_);
            out.noalias() += full * rho_ * full.adjoint();
        }
        rho_ = std::move(out);
    }

    int n_;
    const NoiseModel& noise_;
    std::vector<std::vector<CMatrix>> kraus_;
    CMatrix rho_;
};

}  // namespace detail

/// Final density matrix of a circuit (before readout error).
inline DensityMatrix evolve(const Circuit& circuit, const NoiseModel& noise) {
    circuit.validate();
    detail::Evolver ev(circuit.n_qutrits, noise);
    for (const auto& s : circuit.steps) ev.step(s);
    return DensityMatrix(ev.rho(), DensityMatrix::Unchecked{});
}

/// Readout distribution: final populations pushed through the confusion matrix.
inline std::vector<double> readout_distribution(const DensityMatrix& rho, const NoiseModel& noise) {
    const Eigen::VectorXd pops = rho.populations();
    std::vector<double> clipped = sanitize_distribution(std::span<const double>(pops.data(), static_cast<std::size_t>(pops.size())));
    if (!noise.confusion) return clipped;
    Eigen::MatrixXd c = *noise.confusion;
    const int n = rho.n_qutrits();
    if (c.rows() == 3 && n > 1) {
        Eigen::MatrixXd full = Eigen::MatrixXd::Identity(1, 1);
        for (int q = 0; q < n; ++q) {
            Eigen::MatrixXd next(full.rows() * 3, full.cols() * 3);
            for (Index i = 0; i < full.rows(); ++i)
                for (Index j = 0; j < full.cols(); ++j) next.block(i * 3, j * 3, 3, 3) = full(i, j) * c;
            full = std::move(next);
        }
        c = std::move(full);
    }
    const Eigen::Map<const Eigen::VectorXd> p(clipped.data(), static_cast<Index>(clipped.size()));
    const Eigen::VectorXd out = c.transpose() * p;
    return {out.data(), out.data() + out.size()};
}

inline std::vector<double> outcome_distribution(const Circuit& circuit, const NoiseModel& noise) {
    return readout_distribution(evolve(circuit, noise), noise);
}

/// Noisy evolution followed by sampled readout; deterministic in `seed`.
inline MeasurementCounts simulate(const Circuit& circuit, const NoiseModel& noise, std::uint64_t shots,
                                  std::uint64_t seed) {
    const auto dist = outcome_distribution(circuit, noise);
    return sample_distribution(dist, circuit.n_qutrits, shots, seed);
}

/// Names accepted by noise_preset.
inline std::vector<std::string> noise_preset_names() {
    return {"noiseless",        "depolarizing",     "subspace_depolarizing", "amplitude_damping", "leakage",
            "crosstalk",        "crosstalk_nulled", "readout_misassignment", "cycle_depolarizing"};
}

inline std::string noise_preset_description(const std::string& name) {
    static const std::map<std::string, std::string> d = {
        {"noiseless", "no noise"},
        {"depolarizing", "qutrit depolarizing lambda=0.02 after every random Clifford"},
        {"subspace_depolarizing", "depolarizing lambda=0.02 restricted to {|0>,|1>} after every Clifford"},
        {"amplitude_damping", "sequential decay gamma1=0.004, gamma2=0.006 after every pulse"},
        {"leakage", "|1>-|2> leakage drive delta=0.05 after every 01 pulse plus lambda=0.005 depolarizing per Clifford"},
        {"crosstalk", "lambda=0.01 depolarizing per Clifford and epsilon=0.1 drive crosstalk between qutrits 0 and 1"},
        {"crosstalk_nulled", "the crosstalk preset with epsilon=0"},
        {"readout_misassignment", "lambda=0.02 depolarizing per Clifford and 1% symmetric readout error"},
        {"cycle_depolarizing", "per-qutrit depolarizing lambda=0.05 after every benchmarked cycle"},
    };
    return d.at(name);
}

/// Stock noise models used by the examples and acceptance tests.
inline NoiseModel noise_preset(const std::string& name) {
    NoiseModel m;
    if (name == "noiseless") return m;
    if (name == "depolarizing") return m.bind("clifford", Depolarizing{0.02, std::nullopt});
    if (name == "subspace_depolarizing") return m.bind("clifford", Depolarizing{0.02, Subspace::s01});
    if (name == "amplitude_damping") return m.bind(kPulseLocation, AmplitudeDamping{0.004, 0.006});
    if (name == "leakage") {
        m.bindings.push_back({kPulseLocation, LeakageDrive{0.05}, {}, Subspace::s01, false});
        return m.bind("clifford", Depolarizing{0.005, std::nullopt});
    }
    if (name == "crosstalk" || name == "crosstalk_nulled") {
        const double eps = name == "crosstalk" ? 0.1 : 0.0;
        m.bind("clifford", Depolarizing{0.01, std::nullopt});
        m.crosstalk = {{0, 1, eps}, {1, 0, eps}};
        return m;
    }
    if (name == "readout_misassignment") {
        m.bind("clifford", Depolarizing{0.02, std::nullopt});
        m.confusion = readout_misassignment(0.01);
        return m;
    }
    if (name == "cycle_depolarizing") return m.bind("cycle", Depolarizing{0.05, std::nullopt});
    throw std::invalid_argument("unknown noise preset '" + name + "'");
}

}  // namespace qtrb
