#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rdaudit/grid.hpp"

namespace rdaudit {

enum class MassClass { M, MPrime };

struct MassClassSpec {
  MassClass kind = MassClass::M;
  double c0 = 0.0;  // (M'): sum a_i f_i <= c0 (1 + sum r_i)
};

enum class GrowthClass { None, QG, SQG };

struct GrowthSpec {
  GrowthClass kind = GrowthClass::None;
  double c = 0.0;
  double eps = 0.0;  // SQG only: |f_i| <= c (1 + sum_j r_j^{m_j+1-eps})
};

/// One monomial c * prod_j r_j^{p_j} of a custom reaction.
struct PolyTerm {
  double coef = 0.0;
  Eigen::VectorXd powers;  // length m, entries >= 0; power 0 omits the factor
};

/// Reaction right-hand sides from the catalogue plus custom polynomials,
/// together with the mass vector a and the declared structural classes.
class ReactionSpec {
 public:
  enum class Kind { SAlphaBetaGamma, SAlphaBetaGammaDelta, LotkaVolterra, CustomPolynomial };

  /// f = (alpha R, beta R, -gamma R) with R = u3^gamma - u1^alpha u2^beta.
  /// Mass vector (gamma, gamma, alpha+beta); sum a_i f_i vanishes identically.
  static ReactionSpec s_alpha_beta_gamma(double alpha, double beta, double gamma);

  /// f = (alpha R, beta R, -gamma R, -delta R), R = u3^gamma u4^delta - u1^alpha u2^beta.
  /// Mass vector (gamma, delta, alpha, beta).
  static ReactionSpec s_alpha_beta_gamma_delta(double alpha, double beta, double gamma,
                                               double delta);

  /// f_i = (e_i + sum_j A_ij u_j) u_i with e <= 0 and symmetric part of A
  /// negative semidefinite. Mass vector (1,...,1).
  static ReactionSpec lotka_volterra(Eigen::VectorXd e, Eigen::MatrixXd A);

  static ReactionSpec custom(int m, std::vector<std::vector<PolyTerm>> terms,
                             Eigen::VectorXd a, MassClassSpec mass, GrowthSpec growth);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  int species() const { return m_; }
  const Eigen::VectorXd& mass_vector() const { return a_; }
  const MassClassSpec& mass_class() const { return mass_; }
  const GrowthSpec& growth() const { return growth_; }

  // catalogue parameters (meaningful per kind)
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  const Eigen::VectorXd& lv_e() const { return e_; }
  const Eigen::MatrixXd& lv_matrix() const { return A_; }
  const std::vector<std::vector<PolyTerm>>& custom_terms() const { return terms_; }

  /// f(r) for componentwise nonnegative r; rejects negative input.
  Eigen::ArrayXd evaluate(const Eigen::ArrayXd& r) const;

  /// Unchecked hot path; r and f point at m doubles.
  void evaluate_raw(const double* r, double* f) const;

  /// The S-type systems expose their forward/backward monomials
  /// (u1^a u2^b and u3^g [u4^d]) for exact reaction-budget identities.
  bool has_rate_split() const;
  void rate_split_raw(const double* r, double& forward, double& backward) const;

 private:
  Kind kind_ = Kind::CustomPolynomial;
  int m_ = 0;
  Eigen::VectorXd a_;
  MassClassSpec mass_;
  GrowthSpec growth_;
  double alpha_ = 0, beta_ = 0, gamma_ = 0, delta_ = 0;
  Eigen::VectorXd e_;
  Eigen::MatrixXd A_;
  std::vector<std::vector<PolyTerm>> terms_;
};

/// f_i / (1 + (1/n) sum_j |f_j|): bounded by n, sign-preserving, inherits
/// quasi-positivity and the mass class, and keeps every linear reaction
/// identity exactly (common denominator).
class TruncatedReaction {
 public:
  TruncatedReaction(ReactionSpec spec, double n);

  double n() const { return n_; }
  const ReactionSpec& spec() const { return spec_; }

  Eigen::ArrayXd evaluate(const Eigen::ArrayXd& r) const;
  void evaluate_raw(const double* r, double* f) const;
  /// Also reports the common denominator 1 + sum|f_j|/n.
  void evaluate_raw(const double* r, double* f, double& denom) const;

 private:
  ReactionSpec spec_;
  double n_ = 1.0;
};

/// Componentwise min(u, n) on every species.
State truncate_state(const State& s, double n);

struct AssumptionViolation {
  std::string assumption;
  Eigen::VectorXd r;
  double value = 0.0;
  double bound = 0.0;
};

struct AssumptionReport {
  bool quasi_positive = true;
  bool mass_ok = true;
  bool growth_ok = true;      // trivially true when growth class is None
  bool growth_checked = false;
  bool lv_matrix_ok = true;   // symmetric part NSD (LV only)
  int samples = 0;
  std::vector<AssumptionViolation> violations;
  bool all_ok() const { return quasi_positive && mass_ok && growth_ok && lv_matrix_ok; }
};

/// Deterministic-seed sampling of [0,R]^m with R swept over {1,10,100}:
/// checks (P), the declared mass class, the declared growth class and, for
/// Lotka-Volterra, the symmetric-part eigenvalue criterion. `mexp` supplies
/// the porous exponents used by the SQG bound (pass empty for all-ones).
AssumptionReport verify_assumptions(const ReactionSpec& spec, int sample_count,
                                    const Eigen::VectorXd& mexp = Eigen::VectorXd(),
                                    std::uint64_t seed = 20240611ull);

/// Reaction plus diffusion coefficients and porous exponents.
struct SystemSpec {
  ReactionSpec reaction;
  Eigen::VectorXd d;     // >= 0 (0 = reaction-only species)
  Eigen::VectorXd mexp;  // >= 1; any entry > 1 selects the porous stepper

  int species() const { return reaction.species(); }
  bool porous() const { return (mexp.array() > 1.0).any(); }
};

SystemSpec make_system(ReactionSpec reaction, const std::vector<double>& d,
                       const std::vector<double>& mexp);

}  // namespace rdaudit
