#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rdaudit/grid.hpp"

using namespace rdaudit;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("make_grid basics and rejection") {
  Grid g = make_grid(1, {1.0}, {64}, Bc::Neumann);
  CHECK(g.h(0) == doctest::Approx(1.0 / 64).epsilon(1e-15));
  CHECK(g.measure() == doctest::Approx(1.0));
  CHECK(g.cell_count() == 64);
  CHECK(g.measure() == doctest::Approx(g.cell_count() * g.cell_volume()).epsilon(1e-15));

  Grid g2 = make_grid(2, {1.0, 2.0}, {32, 64}, Bc::Dirichlet);
  CHECK(g2.h(0) == doctest::Approx(1.0 / 32));
  CHECK(g2.h(1) == doctest::Approx(1.0 / 32));
  CHECK(g2.measure() == doctest::Approx(2.0));
  CHECK(g2.cell_count() == 32 * 64);

  CHECK_THROWS_AS(make_grid(3, {1.0, 1.0, 1.0}, {8, 8, 8}, Bc::Neumann),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1, {-1.0}, {8}, Bc::Neumann), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1, {1.0}, {3}, Bc::Neumann), std::invalid_argument);
}

TEST_CASE("integrate and mean on closed forms") {
  Grid g = make_grid(1, {1.0}, {64}, Bc::Neumann);
  CHECK(integrate(Field::constant(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));

  Grid g2 = make_grid(2, {1.0, 2.0}, {16, 16}, Bc::Neumann);
  CHECK(integrate(Field::constant(g2, 3.0)) == doctest::Approx(6.0).epsilon(1e-14));

  Field cosx = Field::from_function(g, [](double x, double) { return std::cos(kPi * x); });
  CHECK(std::abs(integrate(cosx)) < 1e-12);  // midpoint rule, symmetric cancellation

  Field onecos =
      Field::from_function(g, [](double x, double) { return 1.0 + std::cos(kPi * x); });
  CHECK(mean(onecos) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean(Field::constant(g, 4.25)) == doctest::Approx(4.25).epsilon(1e-15));
}

TEST_CASE("integrate is linear and mean centering is idempotent") {
  Grid g = make_grid(1, {2.0}, {37}, Bc::Neumann);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::ArrayXd a(g.cell_count()), b(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) {
      a[i] = dist(rng);
      b[i] = dist(rng);
    }
    const double al = dist(rng), be = dist(rng);
    Field fa(g, a), fb(g, b), fc(g, al * a + be * b);
    CHECK(integrate(fc) ==
          doctest::Approx(al * integrate(fa) + be * integrate(fb)).epsilon(1e-13));

    Field centered(g, a - mean(fa));
    CHECK(std::abs(mean(centered)) < 1e-13);
  }
}

TEST_CASE("lp_norm values and properties") {
  Grid g = make_grid(1, {1.0}, {64}, Bc::Neumann);
  CHECK(lp_norm(Field::constant(g, 2.0), 2.0) == doctest::Approx(2.0).epsilon(1e-14));

  Eigen::ArrayXd alt(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
  CHECK(lp_norm(Field(g, alt), 1.0) == doctest::Approx(1.0).epsilon(1e-14));

  Grid g128 = make_grid(1, {1.0}, {128}, Bc::Neumann);
  Field cosx =
      Field::from_function(g128, [](double x, double) { return std::cos(kPi * x); });
  CHECK(lp_norm(cosx, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(5e-4));

  CHECK_THROWS_AS(lp_norm(cosx, 0.5), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::ArrayXd a(g.cell_count()), b(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) {
      a[i] = dist(rng);
      b[i] = dist(rng);
    }
    for (double p : {1.0, 2.0, 3.5, inf}) {
      Field fa(g, a), fb(g, b), fab(g, a + b), fsa(g, 3.0 * a);
      CHECK(lp_norm(fab, p) <= lp_norm(fa, p) + lp_norm(fb, p) + 1e-12);
      CHECK(lp_norm(fsa, p) == doctest::Approx(3.0 * lp_norm(fa, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("field validation and state sharing") {
  Grid g = make_grid(1, {1.0}, {8}, Bc::Neumann);
  CHECK_THROWS_AS(Field(g, Eigen::ArrayXd::Zero(7)), std::invalid_argument);
  Eigen::ArrayXd bad = Eigen::ArrayXd::Zero(8);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Field(g, bad), std::invalid_argument);

  Grid other = make_grid(1, {1.0}, {16}, Bc::Neumann);
  CHECK_THROWS_AS(
      make_state(0.0, {Field::constant(g, 1.0), Field::constant(other, 1.0)}),
      std::invalid_argument);
}

TEST_CASE("generators: bump mass and cosine nonnegativity") {
  Grid g = make_grid(1, {1.0}, {64}, Bc::Dirichlet);
  Field b = bump(g, 0.5, 0.25, 1.0);
  CHECK(integrate(b) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(b.values().minCoeff() >= 0.0);

  Field c = cosine_mix(g, 1.0, 1.0, 1);
  CHECK(c.values().minCoeff() >= 0.0);

  Field r1 = random_uniform(g, 42, 2.0);
  Field r2 = random_uniform(g, 42, 2.0);
  CHECK((r1.values() == r2.values()).all());
  CHECK(r1.values().maxCoeff() <= 2.0);
  CHECK(r1.values().minCoeff() >= 0.0);
}
