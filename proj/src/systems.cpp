#include "rdaudit/systems.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace rdaudit {

namespace {

// std::pow with fast paths for the small integer exponents the catalogue uses.
double powi(double base, double e) {
  if (e == 1.0) return base;
  if (e == 2.0) return base * base;
  if (e == 3.0) return base * base * base;
  if (e == 0.0) return 1.0;
  return std::pow(base, e);
}

}  // namespace

std::string ReactionSpec::kind_name() const {
  switch (kind_) {
    case Kind::SAlphaBetaGamma: return "s_alpha_beta_gamma";
    case Kind::SAlphaBetaGammaDelta: return "s_alpha_beta_gamma_delta";
    case Kind::LotkaVolterra: return "lotka_volterra";
    case Kind::CustomPolynomial: return "custom";
  }
  return "?";
}

ReactionSpec ReactionSpec::s_alpha_beta_gamma(double alpha, double beta, double gamma) {
  if (alpha < 1.0 || beta < 1.0 || gamma < 1.0)
    throw std::invalid_argument("s_alpha_beta_gamma: exponents must be >= 1");
  ReactionSpec s;
  s.kind_ = Kind::SAlphaBetaGamma;
  s.m_ = 3;
  s.alpha_ = alpha;
  s.beta_ = beta;
  s.gamma_ = gamma;
  s.a_ = Eigen::Vector3d(gamma, gamma, alpha + beta);
  s.mass_ = {MassClass::M, 0.0};
  if (gamma <= 2.0 && alpha + beta <= 2.0)
    s.growth_ = {GrowthClass::QG, 2.0 * std::max({alpha, beta, gamma}), 0.0};
  return s;
}

ReactionSpec ReactionSpec::s_alpha_beta_gamma_delta(double alpha, double beta, double gamma,
                                                    double delta) {
  if (alpha < 1.0 || beta < 1.0 || gamma < 1.0 || delta < 1.0)
    throw std::invalid_argument("s_alpha_beta_gamma_delta: exponents must be >= 1");
  ReactionSpec s;
  s.kind_ = Kind::SAlphaBetaGammaDelta;
  s.m_ = 4;
  s.alpha_ = alpha;
  s.beta_ = beta;
  s.gamma_ = gamma;
  s.delta_ = delta;
  s.a_ = Eigen::Vector4d(gamma, delta, alpha, beta);
  s.mass_ = {MassClass::M, 0.0};
  if (gamma + delta <= 2.0 && alpha + beta <= 2.0)
    s.growth_ = {GrowthClass::QG, 2.0 * std::max({alpha, beta, gamma, delta}), 0.0};
  return s;
}

ReactionSpec ReactionSpec::lotka_volterra(Eigen::VectorXd e, Eigen::MatrixXd A) {
  const int m = static_cast<int>(e.size());
  if (m < 1 || A.rows() != m || A.cols() != m)
    throw std::invalid_argument("lotka_volterra: e and A sizes disagree");
  if ((e.array() > 0.0).any())
    throw std::invalid_argument("lotka_volterra: every e_i must be <= 0");
  Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.eigenvalues().maxCoeff() > 1e-12)
    throw std::invalid_argument("lotka_volterra: symmetric part of A must be NSD");
  ReactionSpec s;
  s.kind_ = Kind::LotkaVolterra;
  s.m_ = m;
  s.e_ = std::move(e);
  s.A_ = std::move(A);
  s.a_ = Eigen::VectorXd::Ones(m);
  s.mass_ = {MassClass::M, 0.0};
  s.growth_ = {GrowthClass::QG,
               2.0 * (s.e_.cwiseAbs().maxCoeff() + m * s.A_.cwiseAbs().maxCoeff() + 1.0), 0.0};
  return s;
}

ReactionSpec ReactionSpec::custom(int m, std::vector<std::vector<PolyTerm>> terms,
                                  Eigen::VectorXd a, MassClassSpec mass, GrowthSpec growth) {
  if (m < 1 || static_cast<int>(terms.size()) != m)
    throw std::invalid_argument("custom: need one term list per species");
  if (a.size() != m || (a.array() <= 0.0).any())
    throw std::invalid_argument("custom: mass vector must be strictly positive, length m");
  for (const auto& list : terms)
    for (const auto& t : list) {
      if (t.powers.size() != m)
        throw std::invalid_argument("custom: term power vector must have length m");
      if ((t.powers.array() < 0.0).any())
        throw std::invalid_argument("custom: negative powers are not allowed");
    }
  ReactionSpec s;
  s.kind_ = Kind::CustomPolynomial;
  s.m_ = m;
  s.terms_ = std::move(terms);
  s.a_ = std::move(a);
  s.mass_ = mass;
  s.growth_ = growth;
  return s;
}

void ReactionSpec::evaluate_raw(const double* r, double* f) const {
  switch (kind_) {
    case Kind::SAlphaBetaGamma: {
      const double R = powi(r[2], gamma_) - powi(r[0], alpha_) * powi(r[1], beta_);
      f[0] = alpha_ * R;
      f[1] = beta_ * R;
      f[2] = -gamma_ * R;
      return;
    }
    case Kind::SAlphaBetaGammaDelta: {
      const double R =
          powi(r[2], gamma_) * powi(r[3], delta_) - powi(r[0], alpha_) * powi(r[1], beta_);
      f[0] = alpha_ * R;
      f[1] = beta_ * R;
      f[2] = -gamma_ * R;
      f[3] = -delta_ * R;
      return;
    }
    case Kind::LotkaVolterra: {
      for (int i = 0; i < m_; ++i) {
        double rate = e_[i];
        for (int j = 0; j < m_; ++j) rate += A_(i, j) * r[j];
        f[i] = rate * r[i];
      }
      return;
    }
    case Kind::CustomPolynomial: {
      for (int i = 0; i < m_; ++i) {
        double acc = 0.0;
        for (const PolyTerm& t : terms_[i]) {
          double v = t.coef;
          for (int j = 0; j < m_; ++j)
            if (t.powers[j] != 0.0) v *= powi(r[j], t.powers[j]);
          acc += v;
        }
        f[i] = acc;
      }
      return;
    }
  }
}

Eigen::ArrayXd ReactionSpec::evaluate(const Eigen::ArrayXd& r) const {
  if (r.size() != m_) throw std::invalid_argument("evaluate: wrong state size");
  if ((r < 0.0).any())
    throw std::invalid_argument("evaluate: reactions are defined on [0,inf)^m only");
  Eigen::ArrayXd f(m_);
  evaluate_raw(r.data(), f.data());
  return f;
}

bool ReactionSpec::has_rate_split() const {
  return kind_ == Kind::SAlphaBetaGamma || kind_ == Kind::SAlphaBetaGammaDelta;
}

void ReactionSpec::rate_split_raw(const double* r, double& forward, double& backward) const {
  forward = powi(r[0], alpha_) * powi(r[1], beta_);
  backward = kind_ == Kind::SAlphaBetaGamma ? powi(r[2], gamma_)
                                            : powi(r[2], gamma_) * powi(r[3], delta_);
}

TruncatedReaction::TruncatedReaction(ReactionSpec spec, double n)
    : spec_(std::move(spec)), n_(n) {
  if (!(n > 0.0)) throw std::invalid_argument("TruncatedReaction: n must be positive");
}

void TruncatedReaction::evaluate_raw(const double* r, double* f, double& denom) const {
  spec_.evaluate_raw(r, f);
  double sum = 0.0;
  for (int i = 0; i < spec_.species(); ++i) sum += std::abs(f[i]);
  denom = 1.0 + sum / n_;
  for (int i = 0; i < spec_.species(); ++i) f[i] /= denom;
}

void TruncatedReaction::evaluate_raw(const double* r, double* f) const {
  double denom;
  evaluate_raw(r, f, denom);
}

Eigen::ArrayXd TruncatedReaction::evaluate(const Eigen::ArrayXd& r) const {
  if (r.size() != spec_.species()) throw std::invalid_argument("evaluate: wrong state size");
  if ((r < 0.0).any())
    throw std::invalid_argument("evaluate: reactions are defined on [0,inf)^m only");
  Eigen::ArrayXd f(spec_.species());
  evaluate_raw(r.data(), f.data());
  return f;
}

State truncate_state(const State& s, double n) {
  if (!(n > 0.0)) throw std::invalid_argument("truncate_state: n must be positive");
  std::vector<Field> out;
  out.reserve(s.species.size());
  for (const Field& f : s.species) out.emplace_back(f.grid(), f.values().min(n));
  return make_state(s.t, std::move(out));
}

AssumptionReport verify_assumptions(const ReactionSpec& spec, int sample_count,
                                    const Eigen::VectorXd& mexp, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("verify_assumptions: sample_count >= 1");
  const int m = spec.species();
  Eigen::VectorXd exps = mexp.size() == m ? mexp : Eigen::VectorXd::Ones(m);

  AssumptionReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd& a = spec.mass_vector();
  Eigen::ArrayXd r(m), f(m);

  auto record = [&](const std::string& what, double value, double bound) {
    if (rep.violations.size() < 32)
      rep.violations.push_back({what, r.matrix(), value, bound});
  };

  for (double range : {1.0, 10.0, 100.0}) {
    for (int s = 0; s < sample_count; ++s) {
      for (int j = 0; j < m; ++j) r[j] = range * unit(rng);
      ++rep.samples;

      spec.evaluate_raw(r.data(), f.data());
      const double fscale = 1.0 + f.abs().sum();
      const double tol = 1e-9 * fscale;

      // (P): f_i >= 0 on the face r_i = 0
      for (int i = 0; i < m; ++i) {
        const double saved = r[i];
        r[i] = 0.0;
        Eigen::ArrayXd fb(m);
        spec.evaluate_raw(r.data(), fb.data());
        if (fb[i] < -tol) {
          rep.quasi_positive = false;
          record("P[" + std::to_string(i) + "]", fb[i], 0.0);
        }
        r[i] = saved;
      }

      // mass class
      const double af = (a.array() * f).sum();
      if (spec.mass_class().kind == MassClass::M) {
        if (af > tol) {
          rep.mass_ok = false;
          record("M", af, 0.0);
        }
      } else {
        const double bound = spec.mass_class().c0 * (1.0 + r.sum());
        if (af > bound + tol) {
          rep.mass_ok = false;
          record("Mprime", af, bound);
        }
      }

      // growth class
      const GrowthSpec& gr = spec.growth();
      if (gr.kind != GrowthClass::None) {
        rep.growth_checked = true;
        double env = 1.0;
        for (int j = 0; j < m; ++j)
          env += gr.kind == GrowthClass::QG ? r[j] * r[j]
                                            : std::pow(r[j], exps[j] + 1.0 - gr.eps);
        const double bound = gr.c * env;
        for (int i = 0; i < m; ++i)
          if (std::abs(f[i]) > bound + tol) {
            rep.growth_ok = false;
            record(gr.kind == GrowthClass::QG ? "QG" : "SQG", std::abs(f[i]), bound);
          }
      }
    }
  }

  if (spec.kind() == ReactionSpec::Kind::LotkaVolterra) {
    Eigen::MatrixXd sym = 0.5 * (spec.lv_matrix() + spec.lv_matrix().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    rep.lv_matrix_ok = eig.eigenvalues().maxCoeff() <= 1e-12;
  }
  return rep;
}

SystemSpec make_system(ReactionSpec reaction, const std::vector<double>& d,
                       const std::vector<double>& mexp) {
  const int m = reaction.species();
  if (static_cast<int>(d.size()) != m)
    throw std::invalid_argument("make_system: need one diffusion coefficient per species");
  if (static_cast<int>(mexp.size()) != m)
    throw std::invalid_argument("make_system: need one porous exponent per species");
  SystemSpec sys;
  sys.reaction = std::move(reaction);
  sys.d = Eigen::Map<const Eigen::VectorXd>(d.data(), m);
  sys.mexp = Eigen::Map<const Eigen::VectorXd>(mexp.data(), m);
  if ((sys.d.array() < 0.0).any())
    throw std::invalid_argument("make_system: diffusion coefficients must be >= 0");
  if ((sys.mexp.array() < 1.0).any())
    throw std::invalid_argument("make_system: porous exponents must be >= 1");
  return sys;
}

}  // namespace rdaudit
