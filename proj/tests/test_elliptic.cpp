#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rdaudit/elliptic.hpp"

using namespace rdaudit;

namespace {
const double kPi = std::acos(-1.0);

Field cos_pix(const Grid& g) {
  return Field::from_function(g, [](double x, double) { return std::cos(kPi * x); });
}
}  // namespace

TEST_CASE("Neumann operator rows sum to zero, discrete divergence theorem") {
  for (int dim : {1, 2}) {
    Grid g = dim == 1 ? make_grid(1, {1.0}, {32}, Bc::Neumann)
                      : make_grid(2, {1.0, 2.0}, {8, 12}, Bc::Neumann);
    Eigen::SparseMatrix<double> A = neg_laplacian_matrix(g, Bc::Neumann);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.cell_count());
    CHECK((A * ones).cwiseAbs().maxCoeff() == 0.0);  // exact zero row sums

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd v(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) v[i] = dist(rng);
    // Int Delta_h v = 0 for any v
    CHECK(std::abs((A * v).sum() * g.cell_volume()) < 1e-11);
  }
}

TEST_CASE("self-adjointness of both operators") {
  Grid g = make_grid(2, {1.0, 1.0}, {12, 12}, Bc::Neumann);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (Bc bc : {Bc::Neumann, Bc::Dirichlet}) {
    Eigen::SparseMatrix<double> A = neg_laplacian_matrix(g, bc);
    Eigen::VectorXd f(g.cell_count()), h(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) {
      f[i] = dist(rng);
      h[i] = dist(rng);
    }
    const double lhs = (A * f).dot(h);
    const double rhs = (A * h).dot(f);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("Neumann Poisson: constants, eigenfunction, normalization") {
  Grid g = make_grid(1, {1.0}, {128}, Bc::Neumann);
  PoissonSolver solver(g);

  Field w0 = solver.solve(Field::constant(g, 3.7));
  CHECK(w0.values().abs().maxCoeff() < 1e-12);

  Field w = solver.solve(cos_pix(g));
  Field exact = Field::from_function(
      g, [](double x, double) { return std::cos(kPi * x) / (kPi * kPi); });
  CHECK((w.values() - exact.values()).abs().maxCoeff() < 2e-4);  // O(h^2)

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::ArrayXd r(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i) r[i] = dist(rng);
  Field wr = solver.solve(Field(g, r));
  CHECK(std::abs(mean(wr)) < 1e-13);
}

TEST_CASE("Dirichlet Poisson: theta closed form and eigenfunction") {
  Grid g = make_grid(1, {1.0}, {128}, Bc::Dirichlet);
  PoissonSolver solver(g);

  Field theta = solver.solve(Field::constant(g, 1.0));
  Field exact =
      Field::from_function(g, [](double x, double) { return 0.5 * x * (1.0 - x); });
  CHECK((theta.values() - exact.values()).abs().maxCoeff() < 2e-5);
  CHECK(theta.values().maxCoeff() == doctest::Approx(0.125).epsilon(5e-3));

  Field wz = solver.solve(Field::constant(g, 0.0));
  CHECK(wz.values().abs().maxCoeff() == 0.0);

  Field s = Field::from_function(g, [](double x, double) { return std::sin(kPi * x); });
  Field ws = solver.solve(s);
  Field wse = Field::from_function(
      g, [](double x, double) { return std::sin(kPi * x) / (kPi * kPi); });
  CHECK((ws.values() - wse.values()).abs().maxCoeff() < 2e-5);
}

TEST_CASE("H^-1 norm: closed form, mean invariance, duality identity") {
  Grid g = make_grid(1, {1.0}, {128}, Bc::Neumann);
  PoissonSolver solver(g);

  const double exact = 1.0 / (kPi * std::sqrt(2.0));  // ~0.225079
  CHECK(hminus1_norm(solver, cos_pix(g)) == doctest::Approx(exact).epsilon(1e-2));

  Grid g512 = make_grid(1, {1.0}, {512}, Bc::Neumann);
  PoissonSolver solver512(g512);
  CHECK(hminus1_norm(solver512, cos_pix(g512)) == doctest::Approx(exact).epsilon(2.5e-3));

  CHECK(hminus1_norm(solver, Field::constant(g, 5.0)) < 1e-12);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::ArrayXd r(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i) r[i] = dist(rng);
  Field f(g, r);
  Field fshift(g, r + 7.0);
  const double n1 = hminus1_norm(solver, f);
  CHECK(hminus1_norm(solver, fshift) == doctest::Approx(n1).epsilon(1e-12));

  // duality: ||f||_{H-1}^2 = <W, f - <f>>
  Field w = solver.solve(f);
  Field centered(g, r - mean(f));
  const double pairing = integrate(Field(g, w.values() * centered.values()));
  CHECK(n1 * n1 == doctest::Approx(pairing).epsilon(1e-10));
}

TEST_CASE("domain constants: theta_inf, c_omega refinement, guarantee") {
  Grid g64 = make_grid(1, {1.0}, {64}, Bc::Neumann);
  Grid g128 = make_grid(1, {1.0}, {128}, Bc::Neumann);
  DomainConstants dc64 = domain_constants(g64);
  DomainConstants dc128 = domain_constants(g128);

  CHECK(dc64.theta_inf == doctest::Approx(0.125).epsilon(5e-3));
  CHECK(dc64.theta.values().minCoeff() >= 0.0);
  CHECK(dc64.c_omega > 0.0);
  CHECK(dc64.c_l1l2 > 0.0);
  // successive-refinement stability of the Green constant
  CHECK(std::abs(dc128.c_omega - dc64.c_omega) / dc64.c_omega < 0.02);

  // guarantee: for g <= kappa mean-zero, max z <= c_omega kappa
  PoissonSolver solver(g64);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::ArrayXd r(g64.cell_count());
    for (int i = 0; i < g64.cell_count(); ++i) r[i] = dist(rng);
    r -= r.mean();
    const double kappa = r.maxCoeff();
    Eigen::ArrayXd z = solver.solve(r);
    CHECK(z.maxCoeff() <= dc64.c_omega * kappa * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("2D smoke: Poisson on a rectangle") {
  Grid g = make_grid(2, {1.0, 1.0}, {24, 24}, Bc::Dirichlet);
  PoissonSolver solver(g);
  // -Delta w = 2 pi^2 sin(pi x) sin(pi y)  ->  w = sin(pi x) sin(pi y)
  Field rhs = Field::from_function(g, [](double x, double y) {
    return 2.0 * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
  });
  Field w = solver.solve(rhs);
  Field exact = Field::from_function(
      g, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
  CHECK((w.values() - exact.values()).abs().maxCoeff() < 5e-3);

  Grid gn = make_grid(2, {1.0, 1.0}, {16, 16}, Bc::Neumann);
  DomainConstants dc = domain_constants(gn);
  CHECK(dc.c_omega > 0.0);
  CHECK(dc.theta_inf > 0.0);
}

TEST_CASE("implicit diffusion: mass conservation and decay") {
  Grid g = make_grid(1, {1.0}, {64}, Bc::Neumann);
  ImplicitDiffusion op(g, Bc::Neumann, 1.0, 1e-3);
  Field u0 = Field::from_function(
      g, [](double x, double) { return 1.0 + std::cos(kPi * x); });
  Eigen::ArrayXd u = op.solve(u0.values());
  CHECK(u.sum() == doctest::Approx(u0.values().sum()).epsilon(1e-13));
  CHECK(u.maxCoeff() < u0.values().maxCoeff());

  ImplicitDiffusion id(g, Bc::Neumann, 0.0, 1e-3);
  CHECK(id.identity());
}
