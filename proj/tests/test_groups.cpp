#include "oracles.hpp"

#include <qtrb/groups.hpp>
#include <qtrb/compiler.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace qtrb;

namespace {

const CliffordTable& table() {
    static const CliffordTable t = generate_clifford_table();
    return t;
}

PauliLabel pl(int a, int b, int ph = 0) { return PauliLabel::single(a, b, ph); }

}  // namespace

TEST(Pauli, ShiftMovesZeroToTwo) {
    const CMatrix x = pauli_matrix(pl(1, 0)).matrix();
    EXPECT_EQ(x(2, 0), cplx(1.0));
    EXPECT_EQ(x(0, 0), cplx(0.0));
    EXPECT_LT(oracle::max_abs(x - oracle::X()), 1e-15);
}

TEST(Pauli, ClockIsDiagonalRootsOfUnity) {
    EXPECT_LT(oracle::max_abs(pauli_matrix(pl(0, 1)).matrix() - oracle::Z()), 1e-15);
}

TEST(Pauli, ComposedLabelsMatchProducts) {
    EXPECT_LT(oracle::max_abs(pauli_matrix(pl(1, 1)).matrix() - oracle::X() * oracle::Z()), 1e-14);
    // Y = ZX is the label X Z with the reordering phase.
    const auto y = pauli_mul(pl(0, 1), pl(1, 0));
    EXPECT_LT(oracle::max_abs(pauli_matrix(y).matrix() - oracle::Z() * oracle::X()), 1e-14);
}

TEST(Pauli, CommutationExponentFromMatrices) {
    const int k = zx_commutation_exponent();
    EXPECT_LT(oracle::max_abs(oracle::Z() * oracle::X() - oracle::w(k) * oracle::X() * oracle::Z()), 1e-14);
    const auto zx = pauli_mul(pl(0, 1), pl(1, 0));
    const auto xz = pauli_mul(pl(1, 0), pl(0, 1));
    EXPECT_EQ(zx.x, xz.x);
    EXPECT_EQ(zx.z, xz.z);
    EXPECT_EQ(mod3(zx.phase - xz.phase), k);
}

TEST(Pauli, IdentityIsNeutral) {
    for (const auto& p : all_paulis(1)) EXPECT_EQ(pauli_mul(PauliLabel::identity(1), p), p);
}

TEST(Pauli, CubeIsIdentity) {
    for (const auto& p : all_paulis(2)) {
        for (int ph = 0; ph < 3; ++ph) {
            const PauliLabel q(p.x, p.z, ph);
            const auto cube = pauli_mul(q, pauli_mul(q, q));
            EXPECT_TRUE(cube.is_identity());
            EXPECT_EQ(cube.phase, 0) << q.name();
        }
    }
}

TEST(Pauli, AdjointIdentities) {
    EXPECT_EQ(pauli_adjoint(pl(0, 1)), pl(0, 2));
    EXPECT_EQ(pauli_adjoint(PauliLabel::identity(1)), PauliLabel::identity(1));
    const PauliLabel xz({1, 0}, {0, 1});
    EXPECT_LT(oracle::max_abs(pauli_matrix(pauli_adjoint(xz)).matrix() - pauli_matrix(xz).matrix().adjoint()), 1e-14);
    for (const auto& p : all_paulis(1)) {
        EXPECT_EQ(pauli_adjoint(p), pauli_mul(p, p)) << p.name();
        EXPECT_LT(oracle::max_abs(pauli_matrix(pauli_adjoint(p)).matrix() - pauli_matrix(p).matrix().adjoint()), 1e-14);
    }
}

TEST(Pauli, MultiplicationHomomorphism) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> ph(0, 2);
    for (int t = 0; t < 1000; ++t) {
        auto p = random_pauli(2, rng);
        auto q = random_pauli(2, rng);
        p.phase = ph(rng);
        q.phase = ph(rng);
        const CMatrix lhs = pauli_matrix(pauli_mul(p, q)).matrix();
        const CMatrix rhs = pauli_matrix(p).matrix() * pauli_matrix(q).matrix();
        ASSERT_LT(oracle::max_abs(lhs - rhs), 1e-12);
    }
}

TEST(Pauli, PatternIndexRoundTrip) {
    for (std::size_t i = 0; i < 81; ++i) EXPECT_EQ(PauliLabel::from_pattern_index(i, 2).pattern_index(), i);
    EXPECT_EQ(PauliLabel({1, 0}, {1, 2}).name(), "XZ_Z2");
    EXPECT_EQ(PauliLabel({1, 0}, {1, 0}).weight(), 1);
}

TEST(Clifford, HasExpectedOrder) {
    EXPECT_EQ(single_qudit_clifford_order(3), 216u);
    EXPECT_EQ(table().size(), 216u);
    EXPECT_EQ(generate_qubit_clifford_group().size(), 24u);
}

TEST(Clifford, GeneratorsAreMembers) {
    EXPECT_TRUE(table().find(QuditMatrix(oracle::H())).has_value());
    EXPECT_TRUE(table().find(QuditMatrix(phase_s())).has_value());
    EXPECT_EQ(clifford_lookup(QuditMatrix::identity(1), table()), table().identity_index());
}

namespace {

// A native π pulse is a Clifford once its diagonal phases are absorbed by
// virtual Z gates; no diagonal phase does the same for a π/2 pulse.
std::set<std::size_t> members_up_to_virtual_z(const CMatrix& u) {
    std::set<std::size_t> out;
    for (int a = 0; a < 24; ++a)
        for (int b = 0; b < 24; ++b) {
            const auto idx = table().find(QuditMatrix(oracle::level_phase(1, a * kPi / 12.0) *
                                                      oracle::level_phase(2, b * kPi / 12.0) * u));
            if (idx) out.insert(*idx);
        }
    return out;
}

}  // namespace

TEST(Clifford, PiPulsesAreMembersHalfPiAreNot) {
    for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}}) {
        const auto pi = members_up_to_virtual_z(oracle::pulse(i, j, kPi, 0.0));
        CMatrix swap = CMatrix::Identity(3, 3);
        swap(i, i) = swap(j, j) = 0.0;
        swap(i, j) = swap(j, i) = 1.0;
        EXPECT_TRUE(pi.count(clifford_lookup(QuditMatrix(swap), table())));
        EXPECT_FALSE(table().find(QuditMatrix(oracle::pulse(i, j, kPi, 0.0))).has_value());
        EXPECT_TRUE(members_up_to_virtual_z(oracle::pulse(i, j, kPi / 2.0, 0.0)).empty());
        EXPECT_TRUE(members_up_to_virtual_z(oracle::pulse(i, j, kPi / 2.0, kPi / 2.0)).empty());
    }
    EXPECT_THROW(clifford_lookup(QuditMatrix(oracle::pulse(0, 1, kPi / 2.0, 0.0)), table()), std::invalid_argument);
}

TEST(Clifford, LookupConventions) {
    const CMatrix h = oracle::H();
    const CMatrix s = phase_s();
    const auto ih = clifford_lookup(QuditMatrix(h), table());
    const auto is = clifford_lookup(QuditMatrix(s), table());
    EXPECT_EQ(clifford_lookup(QuditMatrix(h * s), table()), table().compose(ih, is));
    EXPECT_EQ(clifford_lookup(QuditMatrix(oracle::w(1) * h), table()), ih);
}

TEST(Clifford, ElementsDistinctAndUnitary) {
    for (std::size_t i = 0; i < table().size(); ++i) {
        EXPECT_TRUE(table().matrix(i).is_unitary(1e-10));
        for (std::size_t j = i + 1; j < table().size(); ++j)
            ASSERT_FALSE(global_phase_equal(table().matrix(i), table().matrix(j), 1e-8));
    }
}

TEST(Clifford, ClosureAndInverses) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 1000; ++t) {
        const auto i = random_clifford(table(), rng);
        const auto j = random_clifford(table(), rng);
        ASSERT_TRUE(global_phase_equal(table().matrix(table().compose(i, j)), table().matrix(i) * table().matrix(j), 1e-9));
    }
    for (std::size_t i = 0; i < table().size(); ++i)
        EXPECT_EQ(table().compose(i, table().inverse(i)), table().identity_index());
}

TEST(Clifford, NormalizesPaulis) {
    for (std::size_t i = 0; i < table().size(); ++i)
        for (const auto& p : all_paulis(1)) {
            const auto c = conjugate_pauli(table().matrix(i), p);
            const CMatrix lhs = table().matrix(i).matrix() * pauli_matrix(p).matrix() * table().matrix(i).matrix().adjoint();
            ASSERT_LT(oracle::max_abs(lhs - c.phase() * pauli_matrix(c.image).matrix()), 1e-9);
        }
}

TEST(ConjugatePauli, Examples) {
    for (const auto& p : all_paulis(1)) {
        const auto c = conjugate_pauli(QuditMatrix::identity(1), p);
        EXPECT_EQ(c.omega_power, 0);
        EXPECT_EQ(c.image, p);
    }
    const auto sz = conjugate_pauli(QuditMatrix(phase_s()), pl(0, 1));
    EXPECT_EQ(sz.omega_power, 0);
    EXPECT_EQ(sz.image, pl(0, 1));

    const auto hx = conjugate_pauli(QuditMatrix(oracle::H()), pl(1, 0));
    const CMatrix conj = oracle::H() * oracle::X() * oracle::H().adjoint();
    EXPECT_LT(oracle::max_abs(conj - hx.phase() * pauli_matrix(hx.image).matrix()), 1e-12);
    EXPECT_EQ(hx.image.weight(), 1);
}

TEST(ConjugatePauli, RejectsNonClifford) {
    EXPECT_THROW(conjugate_pauli(QuditMatrix(oracle::pulse(0, 1, kPi / 2.0, 0.0)), pl(1, 0)), std::invalid_argument);
}

TEST(ConjugatePauli, FrameMapMatchesDirect) {
    CMatrix csum = CMatrix::Zero(9, 9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) csum(a * 3 + (a + b) % 3, a * 3 + b) = 1.0;
    const PauliFrameMap frame{QuditMatrix(csum)};
    for (const auto& p : all_paulis(2)) {
        const PauliLabel q(p.x, p.z, 1);
        const CMatrix lhs = csum * pauli_matrix(q).matrix() * csum.adjoint();
        EXPECT_LT(oracle::max_abs(lhs - pauli_matrix(frame.apply(q)).matrix()), 1e-12);
    }
}

TEST(Random, UniformClifford) {
    std::mt19937_64 rng(1234);
    std::vector<int> hist(216, 0);
    const int per = 1000;
    for (int t = 0; t < 216 * per; ++t) ++hist[random_clifford(table(), rng)];
    const double sigma = std::sqrt(per * (1.0 - 1.0 / 216.0));
    for (int h : hist) EXPECT_LT(std::abs(h - per), 5.0 * sigma);
}

TEST(Random, Deterministic) {
    std::mt19937_64 a(9), b(9);
    for (int t = 0; t < 100; ++t) {
        EXPECT_EQ(random_clifford(table(), a), random_clifford(table(), b));
        EXPECT_EQ(random_pauli(2, a), random_pauli(2, b));
    }
}

TEST(Random, PauliMarginals) {
    std::mt19937_64 rng(77);
    const int draws = 90000;
    std::vector<std::vector<int>> hist(2, std::vector<int>(9, 0));
    for (int t = 0; t < draws; ++t) {
        const auto p = random_pauli(2, rng);
        EXPECT_EQ(p.phase, 0);
        for (int q = 0; q < 2; ++q) ++hist[q][3 * p.x[q] + p.z[q]];
    }
    const double mean = draws / 9.0;
    const double sigma = std::sqrt(mean * (8.0 / 9.0));
    for (const auto& h : hist)
        for (int c : h) EXPECT_LT(std::abs(c - mean), 5.0 * sigma);
}
