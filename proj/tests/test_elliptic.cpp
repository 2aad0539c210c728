#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fishgame/elliptic.hpp"

using namespace fishgame;
using std::numbers::pi;

namespace {

Field cosine_K(const Grid& g) {
  return Field::from_function(g, [](double x, double) { return 0.5 + 0.4 * std::cos(pi * x); });
}

// Residual of -mu*Lap(w) - potential*w - rhs, computed independently of the solver.
double reaction_residual(double mu, const Field& potential, const Field& w, const Field& rhs) {
  return sup_norm(-mu * laplacian_apply(w) - potential * w - rhs);
}

// Smooth random admissible strategy: nonnegative, mean below mean(K).
Field random_strategy(const Grid& g, std::mt19937_64& rng, double target_mean) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng) * 6.0;
  Field f = Field::from_function(g, [&](double x, double) {
    return 1.0 + 0.8 * std::sin(c * x + a) * std::cos(3 * b * x);
  });
  return (target_mean / mean(f)) * f;
}

}  // namespace

TEST(LogisticProblem, Validation) {
  const Grid g = Grid::unit_interval(9);
  EXPECT_THROW(LogisticProblem::make(Field(g, 1.2), 1.0), std::invalid_argument);
  EXPECT_THROW(LogisticProblem::make(Field(g, 0.5), 0.0), std::invalid_argument);
  EXPECT_THROW(LogisticProblem::make(Field(g, 1.0), 1.0), std::invalid_argument);  // K0 not < 1
  EXPECT_NO_THROW(LogisticProblem::unchecked(Field(g, 1.0), 1.0));
  EXPECT_NEAR(LogisticProblem::make(cosine_K(g), 2.0).K0(), 0.5, 1e-12);
}

TEST(SolveSteady, ConstantResourcesHalfHarvest) {
  const Grid g = Grid::unit_interval(65);
  const auto P = LogisticProblem::unchecked(Field(g, 1.0), 0.3);
  const auto rep = solve_steady(P, Field(g, 0.5));
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.final_residual, rep.tolerance);
  EXPECT_LE(sup_norm(rep.solution - 0.5), 1e-10);
}

TEST(SolveSteady, NoHarvestGivesK0) {
  const Grid g = Grid::unit_interval(33);
  const auto P = LogisticProblem::make(Field(g, 0.7), 1.0);
  const auto rep = solve_steady(P, Field(g, 0.0));
  EXPECT_LE(sup_norm(rep.solution - 0.7), 1e-10);
}

TEST(SolveSteady, AdmissibilityErrors) {
  const Grid g = Grid::unit_interval(33);
  const auto P = LogisticProblem::make(Field(g, 0.5), 1.0);
  EXPECT_THROW(solve_steady(P, Field(g, 0.5)), AdmissibilityError);
  EXPECT_THROW(solve_steady(P, Field(g, -0.1)), AdmissibilityError);
}

TEST(SolveSteady, MeshConvergenceAgainstFineReference) {
  // Fine grid N = 4096 is the oracle.
  auto mean_theta = [](std::size_t n) {
    const Grid g = Grid::unit_interval(n);
    const auto P = LogisticProblem::make(cosine_K(g), 1.0);
    const auto rep = solve_steady(P, Field(g, 0.0));
    EXPECT_TRUE(rep.converged);
    return std::pair{mean(rep.solution), rep.solution};
  };
  const auto [ref, ref_field] = mean_theta(4096);
  const auto [m256, f256] = mean_theta(256);
  EXPECT_LE(std::abs(m256 - ref), 1e-4);

  // Second-order behaviour: the sup-norm distance to the reference shrinks by
  // at least 3 when the grid is doubled. Compare at nodes shared with N = 4096
  // (x = i/4095 is not nested, so interpolate the reference).
  auto sup_dist = [&](const Field& f) {
    double d = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
      d = std::max(d, std::abs(f[k] - interpolate(ref_field, f.grid.point(k))));
    return d;
  };
  const auto [m65, f65] = mean_theta(65);
  const auto [m129, f129] = mean_theta(129);
  EXPECT_GE(sup_dist(f65) / sup_dist(f129), 3.0);
}

TEST(SolveSteady, MaximumPrincipleBounds) {
  std::mt19937_64 rng(11);
  const Grid g = Grid::unit_interval(129);
  const auto P = LogisticProblem::make(cosine_K(g), 0.2);
  for (int t = 0; t < 5; ++t) {
    const Field a = random_strategy(g, rng, 0.3);
    const auto rep = solve_steady(P, a);
    EXPECT_GE(rep.solution.min(), 0.0);
    EXPECT_LE(rep.solution.max(), sup_norm(P.K()) + sup_norm(a));
    EXPECT_TRUE(rep.solution.finite());
  }
}

TEST(SolveSteady, TwoDimensional) {
  const Grid g = Grid::rectangle(0, 1, 0, 1, 17, 17);
  const Field K = Field::from_function(
      g, [](double x, double y) { return 0.5 + 0.3 * std::cos(pi * x) * std::cos(pi * y); });
  const auto P = LogisticProblem::make(K, 0.1);
  const auto rep = solve_steady(P, Field(g, 0.1));
  EXPECT_TRUE(rep.converged);
  EXPECT_GT(rep.solution.min(), 0.0);
}

TEST(LinearReaction, ConstantSolution) {
  const Grid g = Grid::unit_interval(33);
  const Field w = solve_linear_reaction(g, 0.7, Field(g, -2.0), Field(g, 3.0));
  EXPECT_LE(sup_norm(w - 1.5), 1e-12);
}

TEST(LinearReaction, ConstantAdjoint) {
  const Grid g = Grid::unit_interval(33);
  // potential K - alpha - 2 theta = 1 - 1/2 - 1 = -1/2, rhs alpha = 1/2
  const Field p = solve_linear_reaction(g, 1.0, Field(g, -0.5), Field(g, 0.5));
  EXPECT_LE(sup_norm(p - 1.0), 1e-12);
}

TEST(LinearReaction, ResidualOracle1DAnd2D) {
  for (const Grid& g : {Grid::unit_interval(101), Grid::rectangle(0, 1, 0, 1, 21, 17)}) {
    const Field pot = Field::from_function(g, [](double x, double y) { return -1.0 - 0.5 * std::sin(3 * x + y); });
    const Field rhs = Field::from_function(g, [](double x, double y) { return x * x - y + 0.2; });
    const Field w = solve_linear_reaction(g, 0.3, pot, rhs);
    EXPECT_LE(reaction_residual(0.3, pot, w, rhs), 1e-10);
  }
}

TEST(ZeroMeanPoisson, CosineModes) {
  for (int mode : {1, 2}) {
    auto err = [mode](std::size_t n) {
      const Grid g = Grid::unit_interval(n);
      const double w = mode * pi;
      const Field rhs = Field::from_function(g, [w](double x, double) { return std::cos(w * x); });
      // Trapezoid mean of cos(k pi x) on nodes is exactly zero up to rounding.
      const Field v = solve_zero_mean_poisson(rhs);
      EXPECT_LE(std::abs(mean(v)), 1e-12);
      return sup_norm(v - (1.0 / (w * w)) * rhs);
    };
    const double e1 = err(33), e2 = err(65);
    EXPECT_LT(e1, 1e-3);
    EXPECT_GT(e1 / e2, 3.5);
  }
}

TEST(ZeroMeanPoisson, ZeroAndIncompatible) {
  const Grid g = Grid::unit_interval(17);
  EXPECT_LE(sup_norm(solve_zero_mean_poisson(Field(g, 0.0))), 1e-15);
  EXPECT_THROW(solve_zero_mean_poisson(Field(g, 1e-3)), AdmissibilityError);
}

TEST(ZeroMeanPoisson, TwoDimensional) {
  const Grid g = Grid::rectangle(0, 1, 0, 1, 33, 33);
  const Field rhs = Field::from_function(g, [](double x, double y) { return std::cos(pi * x) + std::cos(pi * y); });
  const Field v = solve_zero_mean_poisson(rhs - mean(rhs));
  EXPECT_LE(sup_norm(v - (1.0 / (pi * pi)) * rhs), 2e-3);
  EXPECT_LE(std::abs(mean(v)), 1e-12);
}

TEST(PrincipalEigenvalue, ConstantPotential) {
  const Grid g = Grid::unit_interval(33);
  const auto ep = principal_eigenvalue(g, 0.5, Field(g, 0.3));
  EXPECT_NEAR(ep.value, -0.3, 1e-10);
  EXPECT_LE(sup_norm(ep.vector - 1.0), 1e-6);
}

TEST(PrincipalEigenvalue, SteadyStateStructure) {
  std::mt19937_64 rng(3);
  const Grid g = Grid::unit_interval(129);
  const auto P = LogisticProblem::make(cosine_K(g), 0.5);
  for (int t = 0; t < 3; ++t) {
    const Field a = random_strategy(g, rng, 0.2);
    const Field theta = solve_steady(P, a).solution;
    const auto zero = principal_eigenvalue(g, P.mu(), P.K() - a - theta);
    const auto pos = principal_eigenvalue(g, P.mu(), P.K() - a - 2.0 * theta);
    EXPECT_NEAR(zero.value, 0.0, 1e-6);
    EXPECT_GT(pos.value, 0.0);
    EXPECT_GT(zero.vector.min(), 0.0);
    EXPECT_NEAR(mean_product(zero.vector, zero.vector), 1.0, 1e-12);
  }
}

TEST(PrincipalEigenvalue, RayleighConsistency) {
  const Grid g = Grid::unit_interval(65);
  const Field pot = Field::from_function(g, [](double x, double) { return std::sin(4 * x) - 0.2; });
  const auto ep = principal_eigenvalue(g, 0.1, pot);
  const Field a = -0.1 * laplacian_apply(ep.vector) - pot * ep.vector;
  const double rq = mean_product(ep.vector, a) / mean_product(ep.vector, ep.vector);
  EXPECT_NEAR(ep.value, rq, 1e-8);
}

TEST(PrincipalEigenvalue, MonotoneInPotential) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid g = Grid::unit_interval(65);
  for (int t = 0; t < 5; ++t) {
    const double a = u(rng), b = u(rng);
    const Field p1 = Field::from_function(g, [&](double x, double) { return std::cos(5 * a * x) - b; });
    // p2 >= p1 with strict inequality on part of the domain
    const Field p2 = p1 + Field::from_function(g, [&](double x, double) { return x > 0.5 ? 0.3 * (x - 0.5) : 0.0; });
    EXPECT_GT(principal_eigenvalue(g, 0.2, p1).value, principal_eigenvalue(g, 0.2, p2).value);
  }
}
