#pragma once

// Command-line application: config parsing, protocol dispatch and result files.
//
// Outputs in the output directory:
//   results.json   fitted decays and derived error figures
//   decay.csv      channel,depth,value_re,value_im,stderr,n
//   manifest.json  config SHA-256, seed, tool version

#include "estimator.hpp"
#include "noise.hpp"
#include "protocols.hpp"
#include "serialization.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qtrb::app {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3, kFitFailure = 4 };

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return ss.str();
}

struct ExperimentConfig {
    std::string protocol;
    std::vector<int> depths;
    int sequences = 30;  // sequences per depth, or randomizations for CB
    std::uint64_t shots = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    NoiseModel noise;
    std::string output_dir = "qtrb_out";
    int bootstrap_resamples = 0;

    std::vector<Subspace> subspaces{Subspace::s01, Subspace::s12, Subspace::s02};
    std::string interleaved_gate = "X01";
    std::vector<int> qutrits{0, 1};
    int n_qutrits = 2;
    std::string cycle = "csum";
    std::vector<std::vector<PauliBasis>> basis_settings;
    bool compile_basis_rotations = false;
};

inline const std::vector<std::string>& protocol_names() {
    static const std::vector<std::string> names{"rb_qubit_like", "rb_qutrit", "rb_interleaved", "rb_simultaneous",
                                                "cycle_benchmarking"};
    return names;
}

/// Parses and validates a config document. `base_dir` resolves a noise file path.
inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
    using detail::reject_unknown;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("protocol") || !j.at("protocol").is_string()) throw ConfigError("config needs a string 'protocol'");
    ExperimentConfig c;
    c.protocol = j.at("protocol").get<std::string>();
    const auto& names = protocol_names();
    if (std::find(names.begin(), names.end(), c.protocol) == names.end())
        throw ConfigError("unknown protocol '" + c.protocol + "'");

    const bool cb = c.protocol == "cycle_benchmarking";
    std::vector<const char*> allowed{"protocol", "depths", "shots", "seed", "noise", "output_dir", "threads"};
    if (cb) {
        for (const char* k : {"randomizations", "cycle", "basis_settings", "compile_basis_rotations"}) allowed.push_back(k);
    } else {
        allowed.push_back("sequences");
        allowed.push_back("bootstrap_resamples");
    }
    if (c.protocol == "rb_qubit_like") allowed.push_back("subspaces");
    if (c.protocol == "rb_interleaved") allowed.push_back("interleaved_gate");
    if (c.protocol == "rb_simultaneous") {
        allowed.push_back("qutrits");
        allowed.push_back("n_qutrits");
    }
    for (const auto& [key, _] : j.items())
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError("unknown key '" + key + "' for protocol " + c.protocol);

    auto get_uint = [&](const char* key, auto& dst, long long min) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < min)
            throw ConfigError(std::string("'") + key + "' must be an integer >= " + std::to_string(min));
        dst = static_cast<std::decay_t<decltype(dst)>>(j.at(key).get<long long>());
    };

    if (!j.contains("depths")) throw ConfigError("config needs 'depths'");
    c.depths = detail::int_list(j.at("depths"), "depths");
    if (c.depths.size() < 4) throw ConfigError("'depths' needs at least 4 entries for fitting");
    for (std::size_t i = 0; i < c.depths.size(); ++i) {
        if (c.depths[i] < 1) throw ConfigError("'depths' entries must be >= 1");
        if (i && c.depths[i] <= c.depths[i - 1]) throw ConfigError("'depths' must be strictly increasing");
    }
    if (cb) {
        c.sequences = 20;
        get_uint("randomizations", c.sequences, 1);
    } else {
        get_uint("sequences", c.sequences, 1);
        get_uint("bootstrap_resamples", c.bootstrap_resamples, 0);
        if (c.bootstrap_resamples == 1) throw ConfigError("'bootstrap_resamples' must be 0 or >= 2");
    }
    get_uint("shots", c.shots, 1);
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
            throw ConfigError("'seed' must be a non-negative integer");
        c.seed = v.get<std::uint64_t>();
    }
    get_uint("threads", c.threads, 0);
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string()) throw ConfigError("'output_dir' must be a string");
        c.output_dir = j.at("output_dir").get<std::string>();
    }

    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        if (n.is_string()) {
            const std::filesystem::path p = base_dir / n.get<std::string>();
            Json doc;
            try {
                doc = Json::parse(read_text_file(p.string()));
            } catch (const Json::parse_error& e) {
                throw ConfigError("noise file '" + p.string() + "': " + e.what());
            }
            c.noise = noise_from_json(doc);
        } else {
            c.noise = noise_from_json(n);
        }
    }

    if (j.contains("subspaces")) {
        c.subspaces.clear();
        for (const auto& s : j.at("subspaces")) {
            try {
                c.subspaces.push_back(parse_subspace(s.get<std::string>()));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("subspaces: ") + e.what());
            }
        }
        if (c.subspaces.empty()) throw ConfigError("'subspaces' must not be empty");
    }
    if (j.contains("interleaved_gate")) c.interleaved_gate = j.at("interleaved_gate").get<std::string>();
    if (j.contains("qutrits")) c.qutrits = detail::int_list(j.at("qutrits"), "qutrits");
    get_uint("n_qutrits", c.n_qutrits, 1);
    if (c.protocol == "rb_simultaneous" && !j.contains("n_qutrits") && !c.qutrits.empty())
        c.n_qutrits = *std::max_element(c.qutrits.begin(), c.qutrits.end()) + 1;
    if (j.contains("cycle")) {
        c.cycle = j.at("cycle").get<std::string>();
        if (c.cycle != "csum" && c.cycle != "identity") throw ConfigError("'cycle' must be \"csum\" or \"identity\"");
    }
    if (j.contains("basis_settings")) {
        for (const auto& s : j.at("basis_settings")) {
            std::vector<PauliBasis> setting;
            for (const auto& b : s) {
                try {
                    setting.push_back(parse_pauli_basis(b.get<std::string>()));
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("basis_settings: ") + e.what());
                }
            }
            if (setting.size() != 2) throw ConfigError("each basis setting lists one basis per qutrit (2)");
            c.basis_settings.push_back(std::move(setting));
        }
    }
    if (j.contains("compile_basis_rotations")) c.compile_basis_rotations = j.at("compile_basis_rotations").get<bool>();

    // Semantic checks that need the whole config.
    const int width = c.protocol == "rb_simultaneous" ? c.n_qutrits : cb ? 2 : 1;
    try {
        c.noise.validate(width);
        if (c.protocol == "rb_interleaved") named_clifford(c.interleaved_gate, BenchmarkContext::instance().cliffords.table);
        if (c.protocol == "rb_simultaneous") {
            if (c.qutrits.size() < 2) throw std::invalid_argument("'qutrits' needs at least 2 entries");
            for (int q : c.qutrits)
                if (q < 0 || q >= c.n_qutrits) throw std::invalid_argument("'qutrits' entry out of range");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

/// Fit failures are collected instead of thrown so every file still gets written.
struct RunOutput {
    Json results;
    std::string csv;
    std::vector<std::string> fit_failures;
};

namespace detail {

inline Json fit_to_json(const DecayFit& f) {
    return {{"A", f.A},         {"p", f.p},         {"B", f.B},     {"sigma_A", f.sigma_A},
            {"sigma_p", f.sigma_p}, {"sigma_B", f.sigma_B}, {"chi2", f.chi2}, {"dof", f.dof},
            {"residual_norm", f.residual_norm}};
}

template <class Fn>
std::optional<DecayFit> try_fit(RunOutput& out, const std::string& what, Json& slot, Fn&& fn) {
    try {
        const DecayFit f = fn();
        slot = fit_to_json(f);
        return f;
    } catch (const FitError& e) {
        slot = {{"error", e.what()}};
        out.fit_failures.push_back(what + ": " + e.what());
        return std::nullopt;
    }
}

inline FitOptions fit_options() { return {}; }

inline RbPlan rb_plan(const ExperimentConfig& c) { return {c.depths, c.sequences, c.shots, c.seed, c.threads}; }

inline void add_rb_summary(RunOutput& out, Json& slot, const DecayRecord& rec, int d, const std::string& what,
                           const ExperimentConfig& c) {
    slot["channel"] = rec.channel;
    const auto f = try_fit(out, what, slot["fit"], [&] { return fit_record(rec, fit_options()); });
    if (!f) return;
    slot["r"] = error_per_clifford(f->p, d);
    slot["sigma_r"] = error_per_clifford_sigma(f->sigma_p, d);
    if (c.bootstrap_resamples > 0) {
        try {
            slot["sigma_p_bootstrap"] = bootstrap_record_sigma_p(rec, c.bootstrap_resamples, derive_seed(c.seed, {0xb007}));
        } catch (const FitError& e) {
            slot["sigma_p_bootstrap_error"] = e.what();
        }
    }
}

inline Json z_diagnostics(const QutritRbResult& r) {
    double worst = 0.0;
    for (const auto& p : r.z.points) {
        const double s = std::max(p.stderr_im, r.z.stderr_floor);
        worst = std::max(worst, std::abs(p.value.imag()) / s);
    }
    const auto& last = r.populations;
    return {{"max_abs_imag_over_stderr", worst},
            {"final_populations",
             {last[0].points.back().value.real(), last[1].points.back().value.real(), last[2].points.back().value.real()}}};
}

}  // namespace detail

/// Runs the configured protocol against the built-in simulator.
inline RunOutput execute(const ExperimentConfig& c) {
    RunOutput out;
    out.csv = kDecayCsvHeader;
    Json& res = out.results;
    res["protocol"] = c.protocol;
    res["tool_version"] = kToolVersion;
    res["seed"] = c.seed;
    const auto& ctx = BenchmarkContext::instance();

    if (c.protocol == "rb_qutrit") {
        const auto r = run_qutrit_rb(detail::rb_plan(c), c.noise);
        for (const auto* rec : {&r.z, &r.populations[0], &r.populations[1], &r.populations[2]}) append_decay_csv(out.csv, *rec);
        detail::add_rb_summary(out, res["z"], r.z, 3, "rb_qutrit Re<Z>", c);
        res["diagnostics"] = detail::z_diagnostics(r);
    } else if (c.protocol == "rb_interleaved") {
        const std::size_t gate = named_clifford(c.interleaved_gate, ctx.cliffords.table);
        const auto r = run_interleaved_rb(detail::rb_plan(c), gate, c.noise);
        for (const auto* rec : {&r.reference.z, &r.interleaved.z}) append_decay_csv(out.csv, *rec);
        res["interleaved_gate"] = c.interleaved_gate;
        res["clifford_index"] = gate;
        detail::add_rb_summary(out, res["reference"], r.reference.z, 3, "reference", c);
        detail::add_rb_summary(out, res["interleaved"], r.interleaved.z, 3, "interleaved", c);
        if (res["reference"]["fit"].contains("p") && res["interleaved"]["fit"].contains("p")) {
            DecayFit fr, fi;
            fr.p = res["reference"]["fit"]["p"].get<double>();
            fr.sigma_p = res["reference"]["fit"]["sigma_p"].get<double>();
            fi.p = res["interleaved"]["fit"]["p"].get<double>();
            fi.sigma_p = res["interleaved"]["fit"]["sigma_p"].get<double>();
            const auto e = interleaved_gate_error(fi, fr, 3);
            res["r_gate"] = e.r;
            res["sigma_r_gate"] = e.sigma;
        }
    } else if (c.protocol == "rb_qubit_like") {
        Json subs = Json::object();
        for (Subspace s : c.subspaces) {
            const auto r = run_qubit_like_rb(detail::rb_plan(c), s, c.noise);
            append_decay_csv(out.csv, r.survival);
            append_decay_csv(out.csv, r.leakage);
            Json& slot = subs[to_string(s)];
            detail::add_rb_summary(out, slot["survival"], r.survival, 2, "survival " + to_string(s), c);
            const auto lf = fit_leakage(r.leakage.fit_points());
            slot["leakage"] = {{"p_l", lf.p_l}, {"sigma", lf.sigma}, {"rate", lf.rate},
                               {"A", lf.A},     {"B", lf.B},         {"degenerate", lf.degenerate}};
        }
        res["subspaces"] = std::move(subs);
    } else if (c.protocol == "rb_simultaneous") {
        const auto r = run_simultaneous_rb(detail::rb_plan(c), c.qutrits, c.n_qutrits, c.noise);
        Json per = Json::array();
        for (std::size_t i = 0; i < r.qutrits.size(); ++i) {
            append_decay_csv(out.csv, r.isolated[i]);
            append_decay_csv(out.csv, r.simultaneous[i]);
            Json slot{{"qutrit", r.qutrits[i]}};
            detail::add_rb_summary(out, slot["isolated"], r.isolated[i], 3, "isolated q" + std::to_string(r.qutrits[i]), c);
            detail::add_rb_summary(out, slot["simultaneous"], r.simultaneous[i], 3,
                                   "simultaneous q" + std::to_string(r.qutrits[i]), c);
            per.push_back(std::move(slot));
        }
        res["qutrits"] = std::move(per);
    } else {
        CbPlan plan;
        plan.cycle_name = c.cycle;
        plan.cycle = c.cycle == "csum" ? csum_matrix() : QuditMatrix::identity(2);
        plan.settings = c.basis_settings;
        plan.depths = c.depths;
        plan.randomizations = c.sequences;
        plan.shots = c.shots;
        plan.master_seed = c.seed;
        plan.compile_basis_rotations = c.compile_basis_rotations;
        plan.threads = c.threads;
        const auto r = run_cycle_benchmarking(plan, c.noise);
        Json channels = Json::object();
        std::map<PauliLabel, double> ps, sigmas;
        FitOptions opt;
        opt.fixed_B = 0.0;
        for (const auto& [q, rec] : r.channels) {
            append_decay_csv(out.csv, rec);
            Json& slot = channels[rec.channel];
            const auto f = detail::try_fit(out, "channel " + rec.channel, slot, [&] { return fit_record(rec, opt); });
            if (f) {
                ps[q] = f->p;
                sigmas[q] = f->sigma_p;
            }
        }
        res["cycle"] = c.cycle;
        res["channels"] = std::move(channels);
        if (ps.size() == r.channels.size()) {
            try {
                const double fp = process_fidelity(ps, 2);
                res["process_fidelity"] = fp;
                res["process_fidelity_sigma"] = process_fidelity_sigma(sigmas, 2);
                res["process_infidelity"] = 1.0 - fp;
                res["average_gate_fidelity"] = average_gate_fidelity(fp, 9);
            } catch (const std::invalid_argument& e) {
                res["process_fidelity_error"] = e.what();
                out.fit_failures.push_back(e.what());
            }
        }
    }
    if (c.bootstrap_resamples > 0) res["bootstrap_resamples"] = c.bootstrap_resamples;
    if (!out.fit_failures.empty()) res["fit_failures"] = out.fit_failures;
    return out;
}

inline void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

/// `run <config>`: returns the process exit code.
inline int run_command(const std::string& config_path, std::ostream& log, std::ostream& err) {
    ExperimentConfig cfg;
    std::string text;
    try {
        text = read_text_file(config_path);
        Json doc;
        try {
            doc = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        cfg = parse_config(doc, std::filesystem::path(config_path).parent_path());
        if (const char* env = std::getenv("QTRB_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    } catch (const ConfigError& e) {
        print_error(err, "config", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        print_error(err, "config", e.what());
        return kConfigError;
    }

    try {
        const RunOutput out = execute(cfg);
        std::filesystem::create_directories(cfg.output_dir);
        const std::filesystem::path dir(cfg.output_dir);
        write_text_file((dir / "results.json").string(), out.results.dump(2) + "\n");
        write_text_file((dir / "decay.csv").string(), out.csv);
        const Json manifest{{"tool", "qtrb"},
                            {"tool_version", kToolVersion},
                            {"config_path", config_path},
                            {"config_sha256", sha256_hex(text)},
                            {"seed", cfg.seed},
                            {"protocol", cfg.protocol},
                            {"files", {"results.json", "decay.csv"}}};
        write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
        log << "wrote " << (dir / "results.json").string() << ", decay.csv, manifest.json\n";
        if (!out.fit_failures.empty()) {
            std::string msg;
            for (const auto& f : out.fit_failures) msg += (msg.empty() ? "" : "; ") + f;
            print_error(err, "fit", msg);
            return kFitFailure;
        }
        return kOk;
    } catch (const std::exception& e) {
        print_error(err, "runtime", e.what());
        return kRuntimeError;
    }
}

/// `export-table <path>`.
inline int export_table_command(const std::string& path, std::ostream& log, std::ostream& err) {
    try {
        const auto& ctx = BenchmarkContext::instance();
        const Json j = table_to_json(ctx.cliffords, ctx.hadamard);
        write_text_file(path, j.dump(1) + "\n");
        log << "wrote " << j["order"].get<std::size_t>() << " Cliffords to " << path << " (mean pulse count "
            << j["stats"]["mean_pulse_count"].get<double>() << ")\n";
        return kOk;
    } catch (const std::exception& e) {
        print_error(err, "runtime", e.what());
        return kRuntimeError;
    }
}

inline int presets_command(std::ostream& log) {
    for (const auto& name : noise_preset_names()) log << std::left << std::setw(24) << name << noise_preset_description(name) << '\n';
    return kOk;
}

}  // namespace qtrb::app
