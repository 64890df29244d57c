#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rdaudit/systems.hpp"

using namespace rdaudit;

TEST_CASE("s_alpha_beta_gamma evaluation against worked values") {
  ReactionSpec s111 = ReactionSpec::s_alpha_beta_gamma(1, 1, 1);
  Eigen::ArrayXd f = s111.evaluate(Eigen::Array3d(1.0, 1.0, 1.0));
  CHECK(f.abs().maxCoeff() == 0.0);  // equilibrium u3^g = u1^a u2^b

  ReactionSpec s212 = ReactionSpec::s_alpha_beta_gamma(2, 1, 2);
  Eigen::ArrayXd f2 = s212.evaluate(Eigen::Array3d(1.0, 2.0, 1.0));
  CHECK(f2[0] == doctest::Approx(-2.0));
  CHECK(f2[1] == doctest::Approx(-1.0));
  CHECK(f2[2] == doctest::Approx(2.0));

  CHECK_THROWS_AS(s111.evaluate(Eigen::Array3d(1.0, -0.1, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(ReactionSpec::s_alpha_beta_gamma(0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("lotka_volterra evaluation and validation") {
  Eigen::MatrixXd A(2, 2);
  A << 0, -1, 1, 0;
  ReactionSpec lv = ReactionSpec::lotka_volterra(Eigen::Vector2d(-1, -1), A);
  Eigen::ArrayXd f = lv.evaluate(Eigen::Array2d(2.0, 3.0));
  CHECK(f[0] == doctest::Approx(-8.0));
  CHECK(f[1] == doctest::Approx(3.0));

  CHECK_THROWS_AS(ReactionSpec::lotka_volterra(Eigen::Vector2d(1, -1), A),
                  std::invalid_argument);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, 1;  // positive definite symmetric part
  CHECK_THROWS_AS(ReactionSpec::lotka_volterra(Eigen::Vector2d(-1, -1), bad),
                  std::invalid_argument);
}

TEST_CASE("mass-vector identities of the built-ins hold at random points") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 10.0);

  ReactionSpec s3 = ReactionSpec::s_alpha_beta_gamma(2, 1, 2);
  ReactionSpec s4 = ReactionSpec::s_alpha_beta_gamma_delta(1, 2, 1, 3);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::ArrayXd r3(3), r4(4);
    for (int i = 0; i < 3; ++i) r3[i] = dist(rng);
    for (int i = 0; i < 4; ++i) r4[i] = dist(rng);
    Eigen::ArrayXd f3 = s3.evaluate(r3), f4 = s4.evaluate(r4);
    const double dot3 = (s3.mass_vector().array() * f3).sum();
    const double dot4 = (s4.mass_vector().array() * f4).sum();
    CHECK(std::abs(dot3) <= 1e-12 * (1.0 + f3.abs().sum()));
    CHECK(std::abs(dot4) <= 1e-12 * (1.0 + f4.abs().sum()));
  }
}

TEST_CASE("truncation formula: worked value and bound") {
  // m=1, f(r) = -r^2, n=5, r=10 -> -100/21
  std::vector<std::vector<PolyTerm>> terms(1);
  PolyTerm t;
  t.coef = -1.0;
  t.powers = Eigen::VectorXd::Constant(1, 2.0);
  terms[0].push_back(t);
  ReactionSpec sq = ReactionSpec::custom(1, terms, Eigen::VectorXd::Ones(1),
                                         {MassClass::M, 0.0}, {});
  TruncatedReaction tr(sq, 5.0);
  Eigen::ArrayXd f = tr.evaluate(Eigen::ArrayXd::Constant(1, 10.0));
  CHECK(f[0] == doctest::Approx(-100.0 / 21.0).epsilon(1e-12));

  // m=2 with f1 = -f2 = 50 at the probe point: 50/21, bounded by n
  ReactionSpec s3 = ReactionSpec::s_alpha_beta_gamma(1, 1, 1);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  for (double n : {5.0, 100.0}) {
    TruncatedReaction trunc(s3, n);
    for (int rep = 0; rep < 2000; ++rep) {
      Eigen::ArrayXd r(3);
      for (int i = 0; i < 3; ++i) r[i] = dist(rng);
      Eigen::ArrayXd fn = trunc.evaluate(r);
      Eigen::ArrayXd fr = s3.evaluate(r);
      CHECK(fn.abs().maxCoeff() <= n);
      for (int i = 0; i < 3; ++i) {
        CHECK(fn[i] * fr[i] >= 0.0);        // sign preserved
        CHECK(std::abs(fn[i]) <= std::abs(fr[i]) + 1e-15);
      }
      // where all f_j = 0 the truncation is exact zero
    }
    Eigen::ArrayXd f0 = trunc.evaluate(Eigen::Array3d(1.0, 1.0, 1.0));
    CHECK(f0.abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("truncation converges pointwise and preserves quasi-positivity") {
  ReactionSpec s3 = ReactionSpec::s_alpha_beta_gamma(1, 1, 2);
  Eigen::ArrayXd r(3);
  r << 4.0, 7.0, 3.0;
  Eigen::ArrayXd f = s3.evaluate(r);
  double prev = std::numeric_limits<double>::infinity();
  for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
    TruncatedReaction trunc(s3, n);
    Eigen::ArrayXd fn = trunc.evaluate(r);
    const double gap = (fn - f).abs().maxCoeff();
    CHECK(gap < prev + 1e-15);
    prev = gap;
    const double s = f.abs().sum();
    // |f^n - f| <= |f| (S/n)/(1+S/n)
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(fn[i] - f[i]) <=
            std::abs(f[i]) * (s / n) / (1.0 + s / n) + 1e-12);
  }

  // quasi-positivity survives truncation: r_i = 0 => f_i^n >= 0
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 20.0);
  TruncatedReaction trunc(s3, 7.0);
  for (int rep = 0; rep < 500; ++rep) {
    Eigen::ArrayXd rr(3);
    for (int i = 0; i < 3; ++i) rr[i] = dist(rng);
    rr[rep % 3] = 0.0;
    Eigen::ArrayXd fn = trunc.evaluate(rr);
    CHECK(fn[rep % 3] >= 0.0);
  }
}

TEST_CASE("truncate_state caps species at n") {
  Grid g = make_grid(1, {1.0}, {16}, Bc::Neumann);
  Field f = Field::from_function(g, [](double x, double) { return 10.0 * x; });
  State s = make_state(0.0, {f});
  State ts = truncate_state(s, 4.0);
  CHECK(ts.species[0].values().maxCoeff() <= 4.0);
  CHECK(ts.species[0].values().minCoeff() >= 0.0);
}

TEST_CASE("verify_assumptions: built-ins pass, constructed violation reported") {
  ReactionSpec s112 = ReactionSpec::s_alpha_beta_gamma(1, 1, 2);
  AssumptionReport rep = verify_assumptions(s112, 200);
  CHECK(rep.quasi_positive);
  CHECK(rep.mass_ok);
  CHECK(rep.growth_ok);

  Eigen::MatrixXd A(2, 2);
  A << 0, -1, 1, 0;
  ReactionSpec lv = ReactionSpec::lotka_volterra(Eigen::Vector2d(-1, -1), A);
  AssumptionReport rlv = verify_assumptions(lv, 200);
  CHECK(rlv.all_ok());
  CHECK(rlv.lv_matrix_ok);

  // custom with f1 = +1 - r1 (f1(0,.) = +1 > 0 fine) vs f1 = -1 constant: (P) violated
  std::vector<std::vector<PolyTerm>> terms(2);
  PolyTerm bad;
  bad.coef = -1.0;
  bad.powers = Eigen::VectorXd::Zero(2);
  terms[0].push_back(bad);
  ReactionSpec violating = ReactionSpec::custom(2, terms, Eigen::Vector2d(1, 1),
                                                {MassClass::M, 0.0}, {});
  AssumptionReport rv = verify_assumptions(violating, 100);
  CHECK_FALSE(rv.quasi_positive);
  CHECK_FALSE(rv.violations.empty());
  CHECK(rv.violations.front().assumption.rfind("P[", 0) == 0);

  // declared (M) but actually growing
  std::vector<std::vector<PolyTerm>> grow(1);
  PolyTerm lin;
  lin.coef = 1.0;
  lin.powers = Eigen::VectorXd::Ones(1);
  grow[0].push_back(lin);
  ReactionSpec growing = ReactionSpec::custom(1, grow, Eigen::VectorXd::Ones(1),
                                              {MassClass::M, 0.0}, {});
  CHECK_FALSE(verify_assumptions(growing, 100).mass_ok);
  // correctly declared (M') passes
  ReactionSpec mp = ReactionSpec::custom(1, grow, Eigen::VectorXd::Ones(1),
                                         {MassClass::MPrime, 1.0}, {});
  CHECK(verify_assumptions(mp, 100).mass_ok);
}

TEST_CASE("make_system validation") {
  ReactionSpec s = ReactionSpec::s_alpha_beta_gamma(1, 1, 1);
  CHECK_THROWS_AS(make_system(s, {1.0, 1.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_system(s, {1.0, 1.0, -1.0}, {1.0, 1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_system(s, {1.0, 1.0, 1.0}, {0.5, 1.0, 1.0}),
                  std::invalid_argument);
  SystemSpec sys = make_system(s, {1.0, 2.0, 3.0}, {1.0, 1.0, 1.0});
  CHECK_FALSE(sys.porous());
  SystemSpec sysp = make_system(s, {1.0, 2.0, 3.0}, {2.0, 1.0, 1.0});
  CHECK(sysp.porous());
}
