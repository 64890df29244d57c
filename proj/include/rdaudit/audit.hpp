#pragma once

#include <map>
#include <string>
#include <vector>

#include "rdaudit/integrate.hpp"

namespace rdaudit {

enum class AuditStatus { Pass, Fail, Inapplicable, Info };

std::string to_string(AuditStatus s);

/// One inequality of the theory evaluated on a discrete trajectory.
struct EstimateAudit {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;  // absolute slack; pass iff margin() >= -tol
  AuditStatus status = AuditStatus::Pass;
  std::map<std::string, double> constants;
  std::string note;

  double margin() const { return rhs - lhs; }
};

EstimateAudit make_audit(std::string name, double lhs, double rhs, double tol);
EstimateAudit info_audit(std::string name, double value, std::string note = "");
EstimateAudit inapplicable_audit(std::string name, std::string note);

/// Default absolute slack 1e-9 * max(1, |rhs|).
double default_tol(double rhs);

struct MassAuditResult {
  std::vector<EstimateAudit> audits;
  std::vector<double> t;
  std::vector<double> combo_mass;  // sum_i a_i Int u_i at each state
};

/// (M): the a-weighted total mass is nonincreasing up to the clip budget and
/// each species obeys ||u_i(t)||_1 <= (1/a_i) ||sum a_j u_j^0||_1.
/// (M'): Gronwall bound sum ||a_i u_i(t)||_1 <= e^{C0 T}[sum ||a_i u_i^0||_1
/// + B |Omega| T]. Both verify the exact discrete mean identity
/// <U(T)> = <U0> + B T - Int <F> on Neumann grids.
MassAuditResult mass_audit(const Trajectory& traj, const std::string& reg_name = "mass");

/// |Int sum_i w_i u_i(t) - Int sum_i w_i u_i(0)| <= tol + clip for all t.
std::vector<EstimateAudit> conservation_audit(
    const Trajectory& traj,
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& combos);

/// The identically-conserved combinations of the built-in systems
/// (empty for reactions without exact conservation laws).
std::vector<std::pair<std::string, Eigen::VectorXd>> builtin_conservation_combos(
    const ReactionSpec& spec);

/// Key L1 & H^-1 estimate: 1/2 ||U(T)||_{H-1}^2 + Int Int U V <= K(T)
/// + 1/2 ||U0||_{H-1}^2 with K = Int [C <F> + <V>] [B|Omega|t + Int U0],
/// C = c_omega. Also checks the per-step lifted chain
/// Phi_k <= C <F_k> + <V_k+1> when the registration ran with chain solves.
std::vector<EstimateAudit> key_estimate_audit(const Trajectory& traj,
                                              const DomainConstants& dc,
                                              const std::string& reg_name = "mass");

/// Pierre's L2 estimate a Int Int U^2 <= ||Int A dt||_inf Int (U0)^2 with
/// A = V/U (floored where U ~ 0), plus the exact A in [min d, max d] check.
std::vector<EstimateAudit> pierre_l2_audit(const Trajectory& traj,
                                           const std::string& reg_name = "mass");

/// Freezes the Appendix-B constant for a mesh: a fixed forced-heat probe run
/// is integrated with chain solves and C = max_k ||Phi_k||_2 / (||F_k||_1 +
/// <V_k>) is returned.
double no_sign_calibrate(const Grid& g);

/// No-sign-condition estimate (N <= 3): a Int Int U^2 <= C (Int [||F||_1 +
/// <V>] dt)^2 + ||U0||_{H-1}^2 with the calibrated C.
std::vector<EstimateAudit> no_sign_audit(const Trajectory& traj, double c_cal,
                                         const std::string& reg_name = "mass");

/// Per-species L1(Q_T) reaction budgets, the exact discrete telescoping
/// identity of the S-systems' third equation, and (porous SQG runs) the
/// uniform-integrability probe over worst measure-fraction cell sets.
std::vector<EstimateAudit> reaction_l1_budget(const Trajectory& traj);

/// Budgets at truncation n vs 2n should agree within rel_tol once n is large.
std::vector<EstimateAudit> budget_stability(const Trajectory& at_n, const Trajectory& at_2n,
                                            double rel_tol = 0.10);

/// Porous duality bounds: Int Int V <= ||theta||_inf ||U0||_1, the reported
/// Int Int U V and L^{m_i+1} budgets, and the Lukkari gradient quantities.
std::vector<EstimateAudit> porous_audit(const Trajectory& traj, const DomainConstants& dc,
                                        const std::string& reg_name = "mass");

struct ConvergenceStudy {
  std::vector<double> n_values;
  std::vector<double> distances;  // D_k = ||u^{n_k} - u^{n_k+1}||_{L1(Q_T)}
  bool pass = false;
};

/// Runs the same problem per n on one grid/dt and measures successive
/// space-time L1 distances on the shared snapshot times; passes when the
/// distances are nonincreasing over the last three consecutive pairs.
ConvergenceStudy truncation_convergence_study(const SystemSpec& sys, const State& u0,
                                              const StepControls& controls,
                                              const std::vector<double>& n_list);

}  // namespace rdaudit
