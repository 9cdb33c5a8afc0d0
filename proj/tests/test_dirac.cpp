#include <boost/rational.hpp>
#include <random>

#include "bateman/dirac.hpp"
#include "support.hpp"

using namespace bateman;
using namespace bateman::dirac;
using bateman::testing::error_kind_of;
using Q = boost::rational<long long>;
using F = LinearPhaseFunction<double>;

namespace {

const PhaseSpace kPs = PhaseSpace::bateman();

F coord(const char* label) { return F::coordinate(kPs, label); }

F random_function(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  F f;
  f.coeffs.resize(kPs.dim());
  for (auto& c : f.coeffs) c = u(rng);
  f.constant = u(rng);
  return f;
}

}  // namespace

TEST(PhaseSpace, SymplecticFormIsAntisymmetricAndSquaresToMinusOne) {
  const std::size_t n = kPs.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_EQ(kPs.symplectic(i, j), -kPs.symplectic(j, i));
      int sq = 0;
      for (std::size_t k = 0; k < n; ++k) sq += kPs.symplectic(i, k) * kPs.symplectic(k, j);
      EXPECT_EQ(sq, i == j ? -1 : 0);
    }
  }
}

TEST(PoissonBracket, CanonicalPairs) {
  EXPECT_EQ(poisson_bracket(coord("Y1"), coord("P_Y1"), kPs), 1.0);
  EXPECT_EQ(poisson_bracket(coord("Y1"), coord("Y2"), kPs), 0.0);
  EXPECT_EQ(poisson_bracket(coord("pi2"), coord("P_pi2"), kPs), 1.0);
}

TEST(PoissonBracket, MomentumConstraintPair) {
  const auto phi = momentum_constraints(1.0, 1.0, kPs);
  EXPECT_EQ(poisson_bracket(phi[0], phi[1], kPs), 1.0);
}

TEST(PoissonBracket, DimensionMismatch) {
  F short_f;
  short_f.coeffs = {1.0, 0.0};
  EXPECT_EQ(error_kind_of([&] { poisson_bracket(short_f, coord("Y1"), kPs); }), ErrorKind::kDimensionMismatch);
}

TEST(PoissonBracket, AntisymmetricAndConstant) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    auto f = random_function(rng), g = random_function(rng);
    EXPECT_NEAR(poisson_bracket(f, g, kPs), -poisson_bracket(g, f, kPs), 1e-14);
    auto f2 = f;
    f2.constant += 5.0;  // constants never enter a bracket
    EXPECT_EQ(poisson_bracket(f2, g, kPs), poisson_bracket(f, g, kPs));
  }
}

TEST(BatemanConstraints, MatrixForUnitAndDoubledDeformation) {
  const auto c1 = build_bateman_constraints(ModelParams{1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(c1.C(0, 0), 0.0);
  EXPECT_EQ(c1.C(0, 1), 1.0);
  EXPECT_EQ(c1.C(1, 0), -1.0);
  EXPECT_EQ(c1.C(1, 1), 0.0);
  const auto c2 = build_bateman_constraints(ModelParams{1.0, 1.0, 2.0, 1.0});
  EXPECT_EQ(c2.C(0, 1), 2.0);
  EXPECT_EQ(c2.C(1, 0), -2.0);
}

TEST(BatemanConstraints, SingularWithoutDeformation) {
  EXPECT_EQ(error_kind_of([] { build_bateman_constraints(ModelParams{1.0, 1.0, 0.0, 1.0}); }),
            ErrorKind::kSingularConstraintMatrix);
}

TEST(FullConstraints, InverseIsExact) {
  for (const auto& [m, s] : std::vector<std::pair<Q, Q>>{{Q(1), Q(1)}, {Q(2), Q(3)}, {Q(3, 2), Q(-5, 7)}, {Q(1), Q(0)}}) {
    const auto cs = build_full_constraints<Q>(m, s);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        Q acc(0);
        for (std::size_t k = 0; k < 4; ++k) acc += cs.C(i, k) * cs.C_inv(k, j);
        EXPECT_EQ(acc, Q(i == j ? 1 : 0));
      }
    }
  }
}

TEST(DiracBracket, NoncommutativeCoordinates) {
  const auto cs = build_full_constraints(ModelParams{1.0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(dirac_bracket(coord("Y1"), coord("Y2"), cs, kPs), 1.0, 1e-15);
  EXPECT_NEAR(dirac_bracket(coord("pi1"), coord("pi2"), cs, kPs), 0.0, 1e-15);
  for (const char* y : {"Y1", "Y2"}) {
    for (const char* p : {"pi1", "pi2"}) {
      const double expected = (y[1] == p[2]) ? 1.0 : 0.0;
      EXPECT_NEAR(dirac_bracket(coord(y), coord(p), cs, kPs), expected, 1e-15) << y << "," << p;
    }
  }
}

TEST(DiracBracket, MomentumPairAloneLeavesCoordinatesCommuting) {
  // phi_1, phi_2 do not involve Y, so they cannot deform {Y1, Y2}.
  const auto cs = build_bateman_constraints(ModelParams{1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(dirac_bracket(coord("Y1"), coord("Y2"), cs, kPs), 0.0);
}

TEST(DiracBracket, Properties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = bateman::testing::random_params(rng);
    const auto cs = build_full_constraints(p);
    auto f = random_function(rng), g = random_function(rng), h = random_function(rng);
    const double a = u(rng), b = u(rng);
    EXPECT_NEAR(dirac_bracket(f, g, cs, kPs), -dirac_bracket(g, f, cs, kPs), 1e-12);
    EXPECT_NEAR(dirac_bracket(a * f + b * h, g, cs, kPs),
                a * dirac_bracket(f, g, cs, kPs) + b * dirac_bracket(h, g, cs, kPs), 1e-11);
    for (const auto& phi : cs.constraints) EXPECT_NEAR(dirac_bracket(phi, g, cs, kPs), 0.0, 1e-13);
  }
}

TEST(DiracBracket, ReducesToPoissonForFunctionsCommutingWithConstraints) {
  const auto cs = build_full_constraints(ModelParams{1.0, 1.0, 1.0, 1.0});
  // Constant functions commute with everything.
  F c;
  c.coeffs.assign(kPs.dim(), 0.0);
  c.constant = 3.0;
  EXPECT_EQ(dirac_bracket(c, coord("Y1"), cs, kPs), poisson_bracket(c, coord("Y1"), kPs));
}

TEST(BracketTable, UnitParametersExact) {
  const auto table = verify_bracket_table<Q>(Q(1), Q(1));
  EXPECT_EQ(table.size(), 16u);
  for (const auto& e : table) {
    EXPECT_TRUE(e.pass) << e.name;
    EXPECT_EQ(e.residual, Q(0)) << e.name;
  }
}

TEST(BracketTable, CoordinateBracketFollowsSOverMSquared) {
  auto y1y2 = [](const auto& table) {
    for (const auto& e : table) {
      if (e.name == "{Y1,Y2}") return e.computed;
    }
    return decltype(table.front().computed)(-99);
  };
  EXPECT_EQ(y1y2(verify_bracket_table<Q>(Q(2), Q(3))), Q(3, 4));
  EXPECT_EQ(y1y2(verify_bracket_table<Q>(Q(1), Q(-1))), Q(-1));
}

TEST(BracketTable, DoublePathWithinTolerance) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    for (const auto& e : verify_bracket_table(bateman::testing::random_params(rng))) {
      EXPECT_TRUE(e.pass) << e.name << " residual " << e.residual;
      EXPECT_LE(e.residual, 1e-14);
    }
  }
}
