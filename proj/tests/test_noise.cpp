#include "oracles.hpp"

#include <qtrb/noise.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qtrb;

namespace {

const CompiledCliffordTable& compiled() {
    static const CompiledCliffordTable t = compile_clifford_table(generate_clifford_table());
    return t;
}

DensityMatrix through(const std::vector<CMatrix>& kraus, const CMatrix& rho) {
    return apply_kraus(DensityMatrix(rho, DensityMatrix::Unchecked{}), kraus);
}

// Random Clifford sequence with its inversion and a "clifford" barrier after each gate.
Circuit rb_circuit(int depth, std::mt19937_64& rng) {
    const auto& t = compiled();
    Circuit c{1, {}};
    std::size_t acc = t.table.identity_index();
    std::vector<std::size_t> gates;
    for (int i = 0; i < depth; ++i) gates.push_back(random_clifford(t.table, rng));
    for (auto g : gates) {
        acc = t.table.compose(g, acc);
        c.add_sequence(0, t.sequence(g));
        c.add_barrier("clifford", {0});
    }
    c.add_sequence(0, t.sequence(t.table.inverse(acc)));
    c.add_barrier("clifford", {0});
    return c;
}

}  // namespace

TEST(Channels, ZeroDepolarizingIsIdentity) {
    const auto k = channel_kraus(Depolarizing{0.0, std::nullopt});
    ASSERT_EQ(k.size(), 1u);
    EXPECT_LT(oracle::max_abs(k[0] - CMatrix::Identity(3, 3)), 1e-15);
}

TEST(Channels, DepolarizingMatchesAnalyticMap) {
    std::mt19937_64 rng(3);
    for (int n : {1, 2}) {
        const int d = n == 1 ? 3 : 9;
        for (double lambda : {0.02, 0.3, 1.0}) {
            const auto k = channel_kraus(Depolarizing{lambda, std::nullopt}, n);
            const CMatrix rho = oracle::random_density(d, rng);
            EXPECT_LT(oracle::max_abs(through(k, rho).matrix() - oracle::depolarize(rho, lambda)), 1e-12);
        }
    }
}

TEST(Channels, DepolarizingShrinksClockExpectation) {
    const double lambda = 0.07;
    const auto out = through(channel_kraus(Depolarizing{lambda, std::nullopt}), DensityMatrix::basis_state(1, 0).matrix());
    const cplx z = (oracle::Z() * out.matrix()).trace();
    EXPECT_NEAR(z.real(), 1.0 - lambda, 1e-14);
    EXPECT_NEAR(z.imag(), 0.0, 1e-14);
}

TEST(Channels, UpperDecayOnly) {
    const double g2 = 0.3;
    const auto out = through(channel_kraus(AmplitudeDamping{0.0, g2}), DensityMatrix::basis_state(1, 2).matrix());
    CMatrix expected = CMatrix::Zero(3, 3);
    expected(2, 2) = 1.0 - g2;
    expected(1, 1) = g2;
    EXPECT_LT(oracle::max_abs(out.matrix() - expected), 1e-15);
}

TEST(Channels, SubspaceDepolarizingActsAsQubitChannel) {
    const double lambda = 0.4;
    CMatrix rho = CMatrix::Zero(3, 3);  // |+⟩ in the 12 subspace
    rho(1, 1) = rho(2, 2) = rho(1, 2) = rho(2, 1) = 0.5;
    const auto out = through(channel_kraus(Depolarizing{lambda, Subspace::s12}), rho);
    CMatrix expected = (1.0 - lambda) * rho;
    expected(1, 1) += lambda / 2.0;
    expected(2, 2) += lambda / 2.0;
    EXPECT_LT(oracle::max_abs(out.matrix() - expected), 1e-14);
    const auto spectator = through(channel_kraus(Depolarizing{lambda, Subspace::s12}), DensityMatrix::basis_state(1, 0).matrix());
    EXPECT_NEAR(spectator(0, 0).real(), 1.0, 1e-15);
}

TEST(Channels, DephasingScalesCoherences) {
    std::mt19937_64 rng(9);
    const CMatrix rho = oracle::random_density(3, rng);
    const auto out = through(channel_kraus(Dephasing{0.25}), rho);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const cplx expected = r == c ? rho(r, c) : 0.75 * rho(r, c);
            EXPECT_LT(std::abs(out(r, c) - expected), 1e-15);
        }
}

TEST(Channels, CoherentAndLeakageRotations) {
    const double delta = 0.3;
    const auto leak = through(channel_kraus(LeakageDrive{delta}), DensityMatrix::basis_state(1, 1).matrix());
    EXPECT_NEAR(leak(2, 2).real(), std::pow(std::sin(delta / 2.0), 2), 1e-15);
    const auto over = channel_kraus(CoherentOverrotation{0.2, Subspace::s01});
    ASSERT_EQ(over.size(), 1u);
    EXPECT_LT(oracle::max_abs(over[0] - oracle::pulse(0, 1, 0.2, 0.0)), 1e-15);
}

TEST(Channels, ParameterRanges) {
    EXPECT_THROW(channel_kraus(Depolarizing{1.5, std::nullopt}), std::invalid_argument);
    EXPECT_THROW(channel_kraus(AmplitudeDamping{-0.1, 0.0}), std::invalid_argument);
    EXPECT_THROW(channel_kraus(Dephasing{2.0}), std::invalid_argument);
    EXPECT_THROW(channel_kraus(LeakageDrive{std::nan("")}), std::invalid_argument);
    EXPECT_THROW(channel_kraus(AmplitudeDamping{0.1, 0.1}, 2), std::invalid_argument);
}

TEST(Channels, AllKrausSetsTracePreserving) {
    const std::vector<ChannelSpec> specs = {Depolarizing{0.1, std::nullopt}, Depolarizing{0.1, Subspace::s02},
                                            AmplitudeDamping{0.2, 0.5},      Dephasing{0.3},
                                            CoherentOverrotation{0.1, Subspace::s12}, LeakageDrive{0.05}};
    for (const auto& s : specs) EXPECT_NO_THROW(require_trace_preserving(channel_kraus(s))) << channel_kind(s);
}

TEST(EmbedOperator, ReorderedQutrits) {
    std::mt19937_64 rng(2);
    const CMatrix a = oracle::random_unitary(3, rng);
    const CMatrix b = oracle::random_unitary(3, rng);
    EXPECT_LT(oracle::max_abs(embed_operator(oracle::kron(a, b), {1, 0}, 2) - oracle::kron(b, a)), 1e-14);
    EXPECT_LT(oracle::max_abs(embed_operator(oracle::kron(a, b), {0, 1}, 2) - oracle::kron(a, b)), 1e-14);
}

TEST(Simulate, NoiselessIdentityCircuit) {
    Circuit c{2, {}};
    const auto counts = simulate(c, NoiseModel{}, 500, 1);
    EXPECT_EQ(counts.by_label().at("00"), 500u);
}

TEST(Simulate, CliffordAndInverseUnderDepolarizing) {
    const double lambda = 0.05;
    const auto& t = compiled();
    const std::size_t g = 17;
    Circuit c{1, {}};
    c.add_sequence(0, t.sequence(g));
    c.add_barrier("clifford", {0});
    c.add_sequence(0, t.sequence(t.table.inverse(g)));
    c.add_barrier("clifford", {0});
    NoiseModel noise;
    noise.bind("clifford", Depolarizing{lambda, std::nullopt});
    const auto rho = evolve(c, noise);

    const CMatrix u = t.table.matrix(g).matrix();
    CMatrix expected = DensityMatrix::basis_state(1, 0).matrix();
    expected = oracle::depolarize(u * expected * u.adjoint(), lambda);
    expected = oracle::depolarize(u.adjoint() * expected * u, lambda);
    EXPECT_LT(oracle::max_abs(rho.matrix() - expected), 1e-12);
    const double q = (1.0 - lambda) * (1.0 - lambda);
    EXPECT_NEAR(rho(0, 0).real(), q + (1.0 - q) / 3.0, 1e-12);
}

TEST(Simulate, BarrierLabelsSelectNoise) {
    const auto& t = compiled();
    Circuit c{1, {}};
    c.add_sequence(0, t.sequence(5));
    c.add_barrier("interleaved", {0});
    NoiseModel noise;
    noise.bind("clifford", Depolarizing{1.0, std::nullopt});
    EXPECT_LT(std::abs(evolve(c, noise).matrix().trace() - cplx(1.0)), 1e-12);
    const CMatrix u = t.table.matrix(5).matrix();
    EXPECT_LT(oracle::max_abs(evolve(c, noise).matrix() - u.col(0) * u.col(0).adjoint()), 1e-12);
}

TEST(Simulate, PulseNoiseFollowsPhysicalPulsesOnly) {
    Circuit virt{1, {}};
    virt.steps.push_back(PulseStep{0, NativeGate::virtual_z(Subspace::s01, 1.0)});
    NoiseModel noise;
    noise.bind(kPulseLocation, Depolarizing{1.0, std::nullopt});
    EXPECT_NEAR(evolve(virt, noise)(0, 0).real(), 1.0, 1e-15);

    Circuit pulse{1, {}};
    pulse.steps.push_back(PulseStep{0, NativeGate::pulse(Subspace::s12, kPi)});
    EXPECT_NEAR(evolve(pulse, noise)(0, 0).real(), 1.0 / 3.0, 1e-14);

    // Subspace-filtered binding ignores 12 pulses.
    NoiseModel filtered;
    filtered.bindings.push_back({kPulseLocation, Depolarizing{1.0, std::nullopt}, {}, Subspace::s01, false});
    EXPECT_NEAR(evolve(pulse, filtered)(0, 0).real(), 1.0, 1e-15);
}

TEST(Simulate, CrosstalkCouplesOnlyWhenNonzero) {
    Circuit c{2, {}};
    for (int i = 0; i < 4; ++i) c.steps.push_back(PulseStep{0, NativeGate::pulse(Subspace::s01, kPi / 2.0)});
    NoiseModel off;
    off.crosstalk = {{0, 1, 0.0}};
    const auto d0 = outcome_distribution(c, off);
    const auto m0 = sample_distribution(d0, 2, 100000, 3).marginal(1);
    EXPECT_EQ(m0[0], 100000u);

    NoiseModel on;
    on.crosstalk = {{0, 1, 0.1}};
    const auto rho = evolve(c, on);
    // Four π/2 pulses rotate the spectator by 4·0.1·(1/2) = 0.2 rad.
    const CMatrix r = oracle::pulse(0, 1, 0.2, 0.0);
    const CMatrix expected_q1 = r.col(0) * r.col(0).adjoint();
    CMatrix reduced = CMatrix::Zero(3, 3);
    for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) reduced(i, j) += rho(a * 3 + i, a * 3 + j);
    EXPECT_LT(oracle::max_abs(reduced - expected_q1), 1e-12);
}

TEST(Simulate, SpamPrepAndReadoutConfusion) {
    NoiseModel noise;
    noise.confusion = readout_misassignment(0.01);
    const auto d = outcome_distribution(Circuit{1, {}}, noise);
    EXPECT_NEAR(d[0], 0.99, 1e-15);
    EXPECT_NEAR(d[1], 0.005, 1e-15);
    const auto d2 = outcome_distribution(Circuit{2, {}}, noise);
    EXPECT_NEAR(d2[0], 0.99 * 0.99, 1e-15);
    EXPECT_NEAR(d2[4], 0.005 * 0.005, 1e-15);

    NoiseModel prep;
    prep.spam_prep = Depolarizing{0.3, std::nullopt};
    EXPECT_NEAR(evolve(Circuit{1, {}}, prep)(0, 0).real(), 0.7 + 0.1, 1e-14);
}

TEST(Simulate, NoiselessRbCircuitsReturnToGround) {
    std::mt19937_64 rng(17);
    for (int depth : {1, 5, 40}) {
        const auto d = outcome_distribution(rb_circuit(depth, rng), NoiseModel{});
        EXPECT_NEAR(d[0], 1.0, 1e-9);
    }
}

TEST(Simulate, TraceStableThroughDeepCircuits) {
    std::mt19937_64 rng(23);
    NoiseModel noise = noise_preset("amplitude_damping");
    noise.bind("clifford", Depolarizing{0.01, std::nullopt});
    const auto rho = evolve(rb_circuit(3000, rng), noise);
    EXPECT_LT(std::abs(rho.matrix().trace() - cplx(1.0)), 1e-8);
    EXPECT_LT(oracle::max_abs(rho.matrix() - rho.matrix().adjoint()), 1e-10);
}

TEST(Simulate, Deterministic) {
    std::mt19937_64 rng(29);
    const auto c = rb_circuit(20, rng);
    const auto noise = noise_preset("depolarizing");
    EXPECT_EQ(simulate(c, noise, 1000, 77).counts, simulate(c, noise, 1000, 77).counts);
    EXPECT_NE(simulate(c, noise, 1000, 77).counts, simulate(c, noise, 1000, 78).counts);
}

TEST(Validation, ModelAndCircuitErrors) {
    NoiseModel bad_qutrit;
    bad_qutrit.bind("clifford", Depolarizing{0.1, std::nullopt}, {3});
    EXPECT_THROW(bad_qutrit.validate(2), std::invalid_argument);

    NoiseModel bad_confusion;
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(0, 1) = 0.1;
    bad_confusion.confusion = c;
    EXPECT_THROW(bad_confusion.validate(1), std::invalid_argument);

    NoiseModel self;
    self.crosstalk = {{1, 1, 0.1}};
    EXPECT_THROW(self.validate(2), std::invalid_argument);

    Circuit outer{1, {}};
    outer.steps.push_back(PulseStep{0, NativeGate::pulse(Subspace::s02, kPi)});
    EXPECT_THROW(outer.validate(), std::invalid_argument);
    Circuit reserved{1, {}};
    reserved.add_barrier(kPulseLocation, {0});
    EXPECT_THROW(reserved.validate(), std::invalid_argument);
    Circuit range{1, {}};
    range.add_matrix({0, 1}, CMatrix::Identity(9, 9));
    EXPECT_THROW(range.validate(), std::invalid_argument);
}

TEST(Presets, AllValidate) {
    for (const auto& name : noise_preset_names()) {
        EXPECT_NO_THROW(noise_preset(name).validate(2)) << name;
        EXPECT_FALSE(noise_preset_description(name).empty());
    }
    EXPECT_THROW(noise_preset("nope"), std::invalid_argument);
}
