#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fishgame/grid.hpp"

using namespace fishgame;
using std::numbers::pi;

namespace {

double laplacian_error_cos(std::size_t n) {
  const Grid g = Grid::unit_interval(n);
  const Field f = Field::from_function(g, [](double x, double) { return std::cos(pi * x); });
  const Field lap = laplacian_apply(f);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    err = std::max(err, std::abs(lap[k] + pi * pi * f[k]));
  return err;
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g);
  for (double& v : f.values) v = u(rng);
  return f;
}

}  // namespace

TEST(Grid, RejectsDegenerateGrids) {
  EXPECT_THROW(Grid::unit_interval(2), std::invalid_argument);
  EXPECT_THROW(Grid::interval(1.0, 1.0, 5), std::invalid_argument);
  EXPECT_THROW(Grid::rectangle(0, 1, 0, 1, 5, 2), std::invalid_argument);
}

TEST(Grid, SpacingAndWeights) {
  const Grid g = Grid::rectangle(0, 2, 0, 1, 5, 3);
  EXPECT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.5);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.5);
  double w = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) w += g.weight(k);
  EXPECT_NEAR(w, 2.0, 1e-15);
  // row-major with y as the slow index
  EXPECT_DOUBLE_EQ(g.point(g.index(3, 2))[0], 1.5);
  EXPECT_DOUBLE_EQ(g.point(g.index(3, 2))[1], 1.0);
}

TEST(Laplacian, ConstantIsHarmonic) {
  for (const Grid& g : {Grid::unit_interval(17), Grid::rectangle(0, 1, 0, 2, 9, 11)}) {
    const Field lap = laplacian_apply(Field(g, 0.37));
    EXPECT_LE(sup_norm(lap), 1e-12);
  }
}

TEST(Laplacian, QuadraticInterior) {
  const Grid g = Grid::unit_interval(65);
  const Field f = Field::from_function(g, [](double x, double) { return x * x; });
  const Field lap = laplacian_apply(f);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) EXPECT_NEAR(lap[k], 2.0, 1e-9);
}

TEST(Laplacian, CosineSecondOrderIncludingBoundary) {
  const double e1 = laplacian_error_cos(33);
  const double e2 = laplacian_error_cos(65);
  EXPECT_LT(e1, 1e-2);
  EXPECT_GT(e1 / e2, 3.5);
}

TEST(Laplacian, TwoDimensionalEigenfunction) {
  auto err = [](std::size_t n) {
    const Grid g = Grid::rectangle(0, 1, 0, 1, n, n);
    const Field f = Field::from_function(
        g, [](double x, double y) { return std::cos(pi * x) * std::cos(pi * y); });
    const Field lap = laplacian_apply(f);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(lap[k] + 2 * pi * pi * f[k]));
    return e;
  };
  EXPECT_GT(err(17) / err(33), 3.5);
}

TEST(Laplacian, Linearity) {
  std::mt19937_64 rng(7);
  const Grid g = Grid::rectangle(0, 1, 0, 1, 13, 9);
  for (int trial = 0; trial < 5; ++trial) {
    const Field f = random_field(g, rng), h = random_field(g, rng);
    const double a = 0.3 + trial, b = -1.7;
    const Field lhs = laplacian_apply(a * f + b * h);
    const Field rhs = a * laplacian_apply(f) + b * laplacian_apply(h);
    EXPECT_LE(sup_norm(lhs - rhs), 1e-10 * (1.0 + sup_norm(lhs)));
  }
}

TEST(Laplacian, DiscreteIntegrationByParts) {
  auto defect = [](std::size_t n) {
    const Grid g = Grid::unit_interval(n);
    const Field f = Field::from_function(g, [](double x, double) { return std::cos(pi * x) + x * x * (1 - 2 * x / 3); });
    const Field h = Field::from_function(g, [](double x, double) { return std::cos(2 * pi * x) + x; });
    const double lhs = integral(h * laplacian_apply(f));
    const auto gf = gradient(f);
    const auto gh = gradient(h);
    return std::abs(lhs + integral(gf[0] * gh[0]));
  };
  // O(h) or better: the defect stays below h on every grid.
  for (std::size_t n : {33u, 65u, 129u}) EXPECT_LE(defect(n), 1.0 / static_cast<double>(n - 1));
}

TEST(Mean, ExactOnConstantsAndLinear) {
  const Grid g = Grid::unit_interval(11);
  EXPECT_NEAR(mean(Field(g, 0.3)), 0.3, 1e-15);
  EXPECT_NEAR(mean(Field::from_function(g, [](double x, double) { return x; })), 0.5, 1e-12);
  const Grid g2 = Grid::rectangle(0, 1, 0, 2, 7, 5);
  EXPECT_NEAR(mean(Field::from_function(g2, [](double x, double y) { return x + 2 * y; })), 2.5,
              1e-12);
}

TEST(Mean, SineSquared) {
  for (std::size_t n : {17u, 65u}) {
    const Grid g = Grid::unit_interval(n);
    const Field f = Field::from_function(g, [](double x, double) { return std::pow(std::sin(pi * x), 2); });
    const double h = g.spacing(0);
    EXPECT_LE(std::abs(mean(f) - 0.5), h * h);
  }
}

TEST(Gradient, ExactOnLinear) {
  const Grid g = Grid::unit_interval(9);
  EXPECT_LE(sup_norm(gradient(Field(g, 4.0))[0]), 1e-15);
  const auto gx = gradient(Field::from_function(g, [](double x, double) { return x; }));
  EXPECT_LE(sup_norm(gx[0] - 1.0), 1e-12);

  const Grid g2 = Grid::rectangle(0, 1, 0, 1, 6, 8);
  const auto gxy = gradient(Field::from_function(g2, [](double x, double y) { return x + 2 * y; }));
  ASSERT_EQ(gxy.size(), 2u);
  EXPECT_LE(sup_norm(gxy[0] - 1.0), 1e-12);
  EXPECT_LE(sup_norm(gxy[1] - 2.0), 1e-12);
}

TEST(Interpolate, LinearIsExact) {
  const Grid g = Grid::rectangle(0, 1, 0, 1, 5, 5);
  const Field f = Field::from_function(g, [](double x, double y) { return 1 + x - 3 * y; });
  EXPECT_NEAR(interpolate(f, {0.33, 0.71}), 1 + 0.33 - 3 * 0.71, 1e-14);
  EXPECT_NEAR(interpolate(f, {1.5, 0.0}), 2.0, 1e-14);  // clamped
}

TEST(FieldCsv, HeaderAndPrecision) {
  const Grid g = Grid::interval(0.0, 1.0, 3);
  Field f(g, 1.0 / 3.0);
  std::ostringstream os;
  write_field_csv(os, f);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "x,value");
  EXPECT_NE(s.find("0.5,0.3333333333333333\n"), std::string::npos);
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_number(0.1), "0.1");

  std::ostringstream os2;
  write_field_csv(os2, Field(Grid::rectangle(0, 1, 0, 1, 3, 3), 0.0));
  EXPECT_EQ(os2.str().substr(0, 12), "x,y,value\n0,");
}
