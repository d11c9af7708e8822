#include <qtrb/app.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace qtrb;

namespace {

const BenchmarkContext& ctx() { return BenchmarkContext::instance(); }

Json table_json() {
    static const Json j = Json::parse(table_to_json(ctx().cliffords, ctx().hadamard).dump());
    return j;
}

Json base_config(const std::string& protocol) {
    return {{"protocol", protocol}, {"depths", {1, 2, 4, 8}}, {"seed", 7}};
}

}  // namespace

TEST(MatrixJson, RoundTripIsExact) {
    std::mt19937_64 rng(2);
    const CMatrix u = haar_unitary(3, rng);
    const CMatrix back = matrix_from_json(Json::parse(matrix_to_json(u).dump()));
    EXPECT_EQ(back, u);
    EXPECT_THROW(matrix_from_json(Json::parse("[[[1,0],[0,0]]]")), ConfigError);
    EXPECT_THROW(matrix_from_json(Json::parse("[[1]]")), ConfigError);
    EXPECT_THROW(matrix_from_json(Json::array()), ConfigError);
}

TEST(SequenceJson, RoundTrip) {
    const auto& seq = ctx().hadamard.sequence;
    const auto back = sequence_from_json(Json::parse(sequence_to_json(seq).dump()));
    ASSERT_EQ(back.gates.size(), seq.gates.size());
    EXPECT_EQ(back.pulse_count(), seq.pulse_count());
    EXPECT_LT(max_abs(back.unitary().matrix() - seq.unitary().matrix()), 1e-15);
}

TEST(TableJson, ExportHasAllElementsAndStats) {
    const Json& j = table_json();
    EXPECT_EQ(j["order"].get<std::size_t>(), 216u);
    EXPECT_EQ(j["elements"].size(), 216u);
    EXPECT_NEAR(j["stats"]["mean_pulse_count"].get<double>(), ctx().cliffords.stats.mean, 1e-15);
    EXPECT_LE(j["stats"]["max_pulse_count"].get<int>(), 6);
    EXPECT_NEAR(j["hadamard_recipe"]["alpha"].get<double>(), 0.47766, 5e-5);
}

TEST(TableJson, ReloadReverifiesClosure) {
    const auto t = table_from_json(table_json());
    ASSERT_EQ(t.table.size(), 216u);
    for (std::size_t i = 0; i < t.table.size(); ++i) {
        EXPECT_EQ(t.table.compose(i, t.table.inverse(i)), t.table.identity_index());
        EXPECT_TRUE(global_phase_equal(t.table.matrix(i), ctx().cliffords.table.matrix(i), 1e-12));
        EXPECT_EQ(t.sequence(i).pulse_count(), ctx().cliffords.sequence(i).pulse_count());
    }
    EXPECT_EQ(t.stats.mean, ctx().cliffords.stats.mean);
}

TEST(TableJson, RejectsTamperedFiles) {
    Json bad = table_json();
    bad["elements"][5]["sequence"] = bad["elements"][6]["sequence"];
    EXPECT_THROW(table_from_json(bad), ConfigError);

    Json wrong_inverse = table_json();
    wrong_inverse["elements"][3]["inverse"] = 3;
    if (ctx().cliffords.table.inverse(3) != 3) {
        EXPECT_THROW(table_from_json(wrong_inverse), ConfigError);
    }

    Json wrong_format = table_json();
    wrong_format["format"] = "something.else";
    EXPECT_THROW(table_from_json(wrong_format), ConfigError);
}

TEST(NoiseJson, PresetsRoundTrip) {
    for (const auto& name : noise_preset_names()) {
        const Json a = noise_to_json(noise_preset(name));
        const Json b = noise_to_json(noise_from_json(Json::parse(a.dump())));
        EXPECT_EQ(a, b) << name;
    }
}

TEST(NoiseJson, ParsesEveryField) {
    const Json j = Json::parse(R"({
        "preset": "depolarizing",
        "bindings": [{"location": "pulse", "channel": {"kind": "leakage_drive", "delta": 0.01},
                      "qutrits": [0], "pulse_subspace": "01"},
                     {"location": "cycle", "channel": {"kind": "depolarizing", "lambda": 0.1}, "joint": true}],
        "crosstalk": [{"source": 0, "target": 1, "epsilon": 0.2}],
        "spam_prep": {"kind": "amplitude_damping", "gamma1": 0.01, "gamma2": 0.0},
        "readout_error": 0.02
    })");
    const auto m = noise_from_json(j);
    ASSERT_EQ(m.bindings.size(), 3u);
    EXPECT_EQ(m.bindings[1].pulse_subspace, Subspace::s01);
    EXPECT_TRUE(m.bindings[2].joint);
    ASSERT_EQ(m.crosstalk.size(), 1u);
    EXPECT_EQ(m.crosstalk[0].epsilon, 0.2);
    ASSERT_TRUE(m.confusion.has_value());
    EXPECT_NEAR((*m.confusion)(0, 0), 0.98, 1e-15);
    EXPECT_NO_THROW(m.validate(2));
}

TEST(NoiseJson, RejectsUnknownKeys) {
    EXPECT_THROW(noise_from_json(Json::parse(R"({"bindingz": []})")), ConfigError);
    EXPECT_THROW(noise_from_json(Json::parse(
                     R"({"bindings": [{"location": "clifford", "channel": {"kind": "depolarizing", "lambda": 0.1}, "when": 1}]})")),
                 ConfigError);
    EXPECT_THROW(noise_from_json(Json::parse(
                     R"({"bindings": [{"location": "clifford", "channel": {"kind": "depolarizing", "lamda": 0.1}}]})")),
                 ConfigError);
    EXPECT_THROW(noise_from_json(Json::parse(R"({"bindings": [{"location": "clifford", "channel": {"kind": "bitflip"}}]})")),
                 ConfigError);
    EXPECT_THROW(noise_from_json(Json::parse(R"({"preset": "nope"})")), ConfigError);
    EXPECT_THROW(noise_from_json(Json::parse(R"({"readout_error": 0.1, "confusion": [[1]]})")), ConfigError);
}

TEST(DecayCsv, FormatAndRoundTrip) {
    DecayRecord r;
    r.channel = "Z";
    r.points.push_back(detail::aggregate(2, {cplx(0.1, 0.2), cplx(0.3, -0.1)}));
    r.points.push_back(detail::aggregate(4, {}));
    r.points.push_back(detail::aggregate(8, {cplx(1.0 / 3.0, 0.0)}));
    std::string csv = kDecayCsvHeader;
    append_decay_csv(csv, r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "channel,depth,value_re,value_im,stderr,n");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "Z,2,");
    std::getline(in, line);
    EXPECT_EQ(line, "Z,8," + format_double(1.0 / 3.0) + ",0,0,1");
    EXPECT_FALSE(std::getline(in, line));
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ConfigSchema, AcceptsMinimalConfigs) {
    for (const auto& p : app::protocol_names()) {
        const auto c = app::parse_config(base_config(p));
        EXPECT_EQ(c.protocol, p);
        EXPECT_EQ(c.seed, 7u);
    }
    const auto cb = app::parse_config(base_config("cycle_benchmarking"));
    EXPECT_EQ(cb.sequences, 20);
    EXPECT_EQ(cb.cycle, "csum");
}

TEST(ConfigSchema, RejectsInvalidConfigs) {
    auto expect_error = [](Json j) { EXPECT_THROW(app::parse_config(j), ConfigError) << j.dump(); };
    Json j = base_config("rb_qutrit");
    j["depths"] = {1};
    expect_error(j);
    j["depths"] = {1, 2, 2, 4};
    expect_error(j);
    j = base_config("rb_qutrit");
    j["colour"] = "blue";
    expect_error(j);
    j = base_config("rb_qutrit");
    j["cycle"] = "csum";
    expect_error(j);
    j = base_config("rb_qutrit");
    j["seed"] = -1;
    expect_error(j);
    j = base_config("rb_qutrit");
    j["shots"] = 0;
    expect_error(j);
    j = base_config("rb_interleaved");
    j["interleaved_gate"] = "T";
    expect_error(j);
    j = base_config("rb_simultaneous");
    j["qutrits"] = {0};
    expect_error(j);
    j = base_config("cycle_benchmarking");
    j["basis_settings"] = {{"X"}};
    expect_error(j);
    j = base_config("rb_qutrit");
    j["noise"] = {{"crosstalk", {{{"source", 0}, {"target", 1}, {"epsilon", 0.1}}}}};
    expect_error(j);
    expect_error(Json{{"protocol", "rb_quantum"}, {"depths", {1, 2, 3, 4}}});
    expect_error(Json::array());
}

TEST(ConfigSchema, InfersRegisterWidthAndReadsNoiseFiles) {
    Json j = base_config("rb_simultaneous");
    j["qutrits"] = {0, 2};
    EXPECT_EQ(app::parse_config(j).n_qutrits, 3);

    const auto dir = std::filesystem::temp_directory_path() / "qtrb_serialization_test";
    std::filesystem::create_directories(dir);
    write_text_file((dir / "noise.json").string(), R"({"preset": "depolarizing"})");
    Json k = base_config("rb_qutrit");
    k["noise"] = "noise.json";
    const auto c = app::parse_config(k, dir);
    ASSERT_EQ(c.noise.bindings.size(), 1u);
    EXPECT_EQ(c.noise.bindings[0].location, "clifford");
    k["noise"] = "missing.json";
    EXPECT_THROW(app::parse_config(k, dir), ConfigError);
    std::filesystem::remove_all(dir);
}
