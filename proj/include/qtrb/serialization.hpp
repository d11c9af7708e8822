#pragma once

// JSON forms of compiled Clifford tables and noise models, and the CSV form of
// decay records. Floating-point values are written with 17 significant digits
// so a load reproduces every matrix entry bit for bit.

#include "compiler.hpp"
#include "groups.hpp"
#include "noise.hpp"
#include "protocols.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qtrb {

using Json = nlohmann::ordered_json;

inline constexpr int kTableFormatVersion = 1;

/// Config and file-format errors (mapped to the CLI's config-error exit code).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Matrices and gates

inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
    const Index n = static_cast<Index>(j.size());
    CMatrix m(n, n);
    for (Index r = 0; r < n; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ConfigError("matrix must be square");
        for (Index c = 0; c < n; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError("matrix entries must be [re, im] pairs");
            m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

inline Json gate_to_json(const NativeGate& g) {
    return {{"kind", g.is_pulse() ? "pulse" : "virtual_z"},
            {"subspace", to_string(g.subspace)},
            {"angle", g.angle},
            {"frame_phase", g.frame_phase}};
}

inline NativeGate gate_from_json(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const Subspace s = parse_subspace(j.at("subspace").get<std::string>());
    NativeGate g = kind == "pulse" ? NativeGate::pulse(s, j.at("angle").get<double>(), j.at("frame_phase").get<double>())
                   : kind == "virtual_z" ? NativeGate::virtual_z(s, j.at("angle").get<double>())
                                         : throw ConfigError("unknown gate kind '" + kind + "'");
    // Keep stored angles exactly; the factories above may re-wrap them.
    g.angle = j.at("angle").get<double>();
    g.frame_phase = j.at("frame_phase").get<double>();
    return g;
}

inline Json sequence_to_json(const NativeSequence& s) {
    Json out = Json::array();
    for (const auto& g : s.gates) out.push_back(gate_to_json(g));
    return out;
}

inline NativeSequence sequence_from_json(const Json& j) {
    NativeSequence s;
    for (const auto& g : j) s.gates.push_back(gate_from_json(g));
    return s;
}

// ---------------------------------------------------------------------------
// Compiled Clifford table

struct TableStats {
    PulseStats pulses;
    double mean_native_gates = 0.0;     // pulses plus virtual Z, averaged over the group
    double mean_pulses_sampled = 0.0;   // averaged over gates of sampled RB sequences
    std::size_t sampled_gates = 0;
};

/// Mean pulse count over all gates (random and inversion) of `n_sequences`
/// RB sequences of the given depth.
inline double sampled_mean_pulses(const CompiledCliffordTable& t, int n_sequences, int depth, std::uint64_t seed,
                                  std::size_t* gate_count = nullptr) {
    std::mt19937_64 rng(seed);
    double total = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < n_sequences; ++i) {
        const auto seq = gen_rb_sequence(depth, t.table, rng);
        for (auto g : seq.gates) total += t.sequence(g).pulse_count();
        total += t.sequence(seq.inversion).pulse_count();
        n += seq.gates.size() + 1;
    }
    if (gate_count) *gate_count = n;
    return total / static_cast<double>(n);
}

inline TableStats table_stats(const CompiledCliffordTable& t) {
    TableStats s;
    s.pulses = t.stats;
    double gates = 0.0;
    for (const auto& q : t.sequences) gates += static_cast<double>(q.gates.size());
    s.mean_native_gates = gates / static_cast<double>(t.sequences.size());
    s.mean_pulses_sampled = sampled_mean_pulses(t, 100, 100, 0x5eed, &s.sampled_gates);
    return s;
}

inline Json table_to_json(const CompiledCliffordTable& t, const HadamardRecipe& h) {
    const TableStats st = table_stats(t);
    Json j;
    j["format"] = "qtrb.clifford_table";
    j["version"] = kTableFormatVersion;
    j["order"] = t.table.size();
    j["generators"] = {"H", "S"};
    j["stats"] = {{"mean_pulse_count", st.pulses.mean},
                  {"min_pulse_count", st.pulses.min},
                  {"max_pulse_count", st.pulses.max},
                  {"mean_native_gate_count", st.mean_native_gates},
                  {"mean_pulse_count_sampled_sequences", st.mean_pulses_sampled},
                  {"sampled_gate_count", st.sampled_gates},
                  {"reference_mean_native_gates", 3.325}};
    j["hadamard_recipe"] = {{"rotation_angle", h.rotation_angle},
                            {"alpha", h.alpha()},
                            {"pulse_count", h.sequence.pulse_count()},
                            {"sequence", sequence_to_json(h.sequence)}};
    Json elems = Json::array();
    for (std::size_t i = 0; i < t.table.size(); ++i) {
        elems.push_back({{"index", i},
                         {"inverse", t.table.inverse(i)},
                         {"pulse_count", t.sequence(i).pulse_count()},
                         {"matrix", matrix_to_json(t.table.matrix(i).matrix())},
                         {"sequence", sequence_to_json(t.sequence(i))}});
    }
    j["elements"] = std::move(elems);
    return j;
}

/// Rebuilds the table from JSON, re-deriving composition and inverse tables
/// (closure is re-verified) and re-verifying every stored sequence.
inline CompiledCliffordTable table_from_json(const Json& j) {
    if (j.value("format", "") != "qtrb.clifford_table") throw ConfigError("not a Clifford table file");
    if (j.value("version", 0) != kTableFormatVersion) throw ConfigError("unsupported table version");
    const auto& elems = j.at("elements");
    std::vector<CMatrix> mats;
    std::vector<NativeSequence> seqs;
    for (std::size_t i = 0; i < elems.size(); ++i) {
        if (elems[i].at("index").get<std::size_t>() != i) throw ConfigError("table elements out of order");
        mats.push_back(matrix_from_json(elems[i].at("matrix")));
        seqs.push_back(sequence_from_json(elems[i].at("sequence")));
    }
    CliffordTable table{detail::PhaseFreeGroup(std::move(mats))};
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (elems[i].at("inverse").get<std::size_t>() != table.inverse(i))
            throw ConfigError("stored inverse of element " + std::to_string(i) + " is wrong");
        if (!verifies(seqs[i], table.matrix(i)))
            throw ConfigError("stored sequence of element " + std::to_string(i) + " does not verify");
    }
    const PulseStats stats = pulse_stats(seqs);
    return {std::move(table), std::move(seqs), stats};
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Noise models
//
// {
//   "preset": "depolarizing",                     optional starting point
//   "bindings": [{"location": "clifford" | "pulse" | "interleaved" | "cycle" | ...,
//                 "channel": {"kind": "depolarizing", "lambda": 0.02, "subspace": "01"},
//                 "qutrits": [0], "pulse_subspace": "01", "joint": false}],
//   "crosstalk": [{"source": 0, "target": 1, "epsilon": 0.1}],
//   "spam_prep": {"kind": "amplitude_damping", "gamma1": 0.01, "gamma2": 0.0},
//   "readout_error": 0.01  |  "confusion": [[...], ...]
// }

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline double number_at(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

inline std::vector<int> int_list(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of integers");
    std::vector<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ConfigError(where + " must be an array of integers");
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace detail

inline ChannelSpec channel_from_json(const Json& j) {
    const std::string where = "channel";
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ConfigError("channel needs a string 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    auto subspace = [&](const char* key) {
        try {
            return parse_subspace(j.at(key).get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("channel.") + key + ": " + e.what());
        }
    };
    if (kind == "depolarizing") {
        detail::reject_unknown(j, {"kind", "lambda", "subspace"}, where);
        Depolarizing d{detail::number_at(j, "lambda", where), std::nullopt};
        if (j.contains("subspace")) d.subspace = subspace("subspace");
        return d;
    }
    if (kind == "amplitude_damping") {
        detail::reject_unknown(j, {"kind", "gamma1", "gamma2"}, where);
        return AmplitudeDamping{detail::number_at(j, "gamma1", where), detail::number_at(j, "gamma2", where)};
    }
    if (kind == "dephasing") {
        detail::reject_unknown(j, {"kind", "lambda"}, where);
        return Dephasing{detail::number_at(j, "lambda", where)};
    }
    if (kind == "coherent_overrotation") {
        detail::reject_unknown(j, {"kind", "epsilon", "subspace"}, where);
        return CoherentOverrotation{detail::number_at(j, "epsilon", where), subspace("subspace")};
    }
    if (kind == "leakage_drive") {
        detail::reject_unknown(j, {"kind", "delta"}, where);
        return LeakageDrive{detail::number_at(j, "delta", where)};
    }
    throw ConfigError("unknown channel kind '" + kind + "'");
}

inline Json channel_to_json(const ChannelSpec& c) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Depolarizing>) {
                Json j{{"kind", "depolarizing"}, {"lambda", v.lambda}};
                if (v.subspace) j["subspace"] = to_string(*v.subspace);
                return j;
            } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
                return {{"kind", "amplitude_damping"}, {"gamma1", v.gamma1}, {"gamma2", v.gamma2}};
            } else if constexpr (std::is_same_v<T, Dephasing>) {
                return {{"kind", "dephasing"}, {"lambda", v.lambda}};
            } else if constexpr (std::is_same_v<T, CoherentOverrotation>) {
                return {{"kind", "coherent_overrotation"}, {"epsilon", v.epsilon}, {"subspace", to_string(v.subspace)}};
            } else {
                return {{"kind", "leakage_drive"}, {"delta", v.delta}};
            }
        },
        c);
}

inline NoiseModel noise_from_json(const Json& j) {
    detail::reject_unknown(j, {"preset", "bindings", "crosstalk", "spam_prep", "readout_error", "confusion"}, "noise");
    NoiseModel m;
    if (j.contains("preset")) {
        try {
            m = noise_preset(j.at("preset").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("noise.preset: ") + e.what());
        }
    }
    if (j.contains("bindings")) {
        if (!j.at("bindings").is_array()) throw ConfigError("noise.bindings must be an array");
        for (const auto& b : j.at("bindings")) {
            detail::reject_unknown(b, {"location", "channel", "qutrits", "pulse_subspace", "joint"}, "noise binding");
            if (!b.contains("location") || !b.at("location").is_string())
                throw ConfigError("noise binding needs a string 'location'");
            NoiseBinding nb{b.at("location").get<std::string>(), channel_from_json(b.at("channel")), {}, std::nullopt, false};
            if (b.contains("qutrits")) nb.qutrits = detail::int_list(b.at("qutrits"), "noise binding qutrits");
            if (b.contains("pulse_subspace")) nb.pulse_subspace = parse_subspace(b.at("pulse_subspace").get<std::string>());
            if (b.contains("joint")) nb.joint = b.at("joint").get<bool>();
            m.bindings.push_back(std::move(nb));
        }
    }
    if (j.contains("crosstalk")) {
        m.crosstalk.clear();
        for (const auto& c : j.at("crosstalk")) {
            detail::reject_unknown(c, {"source", "target", "epsilon"}, "crosstalk entry");
            m.crosstalk.push_back({c.at("source").get<int>(), c.at("target").get<int>(),
                                   detail::number_at(c, "epsilon", "crosstalk entry")});
        }
    }
    if (j.contains("spam_prep")) m.spam_prep = channel_from_json(j.at("spam_prep"));
    if (j.contains("readout_error") && j.contains("confusion"))
        throw ConfigError("noise: give either readout_error or confusion, not both");
    if (j.contains("readout_error")) m.confusion = readout_misassignment(detail::number_at(j, "readout_error", "noise"));
    if (j.contains("confusion")) {
        const auto& c = j.at("confusion");
        if (!c.is_array() || c.empty()) throw ConfigError("noise.confusion must be a square array");
        const Index n = static_cast<Index>(c.size());
        Eigen::MatrixXd mat(n, n);
        for (Index r = 0; r < n; ++r) {
            const auto& row = c[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ConfigError("noise.confusion must be square");
            for (Index k = 0; k < n; ++k) mat(r, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
        m.confusion = std::move(mat);
    }
    return m;
}

inline Json noise_to_json(const NoiseModel& m) {
    Json j;
    Json bindings = Json::array();
    for (const auto& b : m.bindings) {
        Json e{{"location", b.location}, {"channel", channel_to_json(b.channel)}};
        if (!b.qutrits.empty()) e["qutrits"] = b.qutrits;
        if (b.pulse_subspace) e["pulse_subspace"] = to_string(*b.pulse_subspace);
        if (b.joint) e["joint"] = true;
        bindings.push_back(std::move(e));
    }
    j["bindings"] = std::move(bindings);
    if (!m.crosstalk.empty()) {
        Json xs = Json::array();
        for (const auto& c : m.crosstalk) xs.push_back({{"source", c.source}, {"target", c.target}, {"epsilon", c.epsilon}});
        j["crosstalk"] = std::move(xs);
    }
    if (m.spam_prep) j["spam_prep"] = channel_to_json(*m.spam_prep);
    if (m.confusion) {
        Json rows = Json::array();
        for (Index r = 0; r < m.confusion->rows(); ++r) {
            Json row = Json::array();
            for (Index c = 0; c < m.confusion->cols(); ++c) row.push_back((*m.confusion)(r, c));
            rows.push_back(std::move(row));
        }
        j["confusion"] = std::move(rows);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Decay CSV

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kDecayCsvHeader = "channel,depth,value_re,value_im,stderr,n\n";

/// One row per valid point; `stderr` is the standard error of the real part.
inline void append_decay_csv(std::string& out, const DecayRecord& r) {
    for (const auto& p : r.points) {
        if (!p.valid) continue;
        out += r.channel;
        out += ',' + std::to_string(p.depth) + ',' + format_double(p.value.real()) + ',' + format_double(p.value.imag()) +
               ',' + format_double(p.stderr_re) + ',' + std::to_string(p.n) + '\n';
    }
}

}  // namespace qtrb
