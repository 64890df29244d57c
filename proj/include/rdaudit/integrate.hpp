#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdaudit/elliptic.hpp"
#include "rdaudit/systems.hpp"

namespace rdaudit {

struct StepControls {
  double T = 1.0;
  std::optional<double> dt;  // base step; required for the semilinear stepper
  double cfl = 0.9;          // porous Courant factor in (0,1]
  long max_steps = 20'000'000;
  double blowup_threshold = 1e8;
  /// Allowed cumulative clipped mass; default 1e-10 * initial total mass.
  std::optional<double> clip_tolerance;
  /// Snapshots every stride * base-dt time units (exactly hit by clamping dt).
  int snapshot_stride = 10;
  bool store_snapshots = true;
};

/// A (U,V) pair in the sense of the relation dU/dt - Delta V = B - F:
/// U = w(t) sum_i u_weights[i] u_i,  V = w(t) sum_i v_weights[i] u_i^{m_i?},
/// w(t) = exp(-time_decay t). F is recovered per step from the actual states,
/// so the registration telescopes exactly whatever the stepper did.
struct UVRegistration {
  std::string name = "mass";
  Eigen::VectorXd u_weights;
  Eigen::VectorXd v_weights;
  bool v_uses_mexp = false;  // porous: weights apply to u^{m_i}
  double B = 0.0;
  double time_decay = 0.0;  // C0 for the (M') exponential weighting
  double a_coef = 0.0;      // ellipticity floor a with V >= a U (min_i d_i)
  /// Per-step lifted solves -Delta_h W = U - <U>: fills the Phi series used by
  /// the key-estimate chain and the no-sign audit. Neumann grids only.
  bool chain = false;
};

/// Canonical registration for the system's declared mass class: u_weights = a,
/// v_weights = a_i d_i, B = 0 for (M); B = C0 sum a_i and exponential
/// time-weighting for (M').
UVRegistration mass_registration(const SystemSpec& sys, bool chain = false);

struct RegistrationResult {
  UVRegistration reg;

  // Space-time accumulators. "end" marks the endpoint the scheme makes
  // provable: right (k+1) for the semilinear IMEX stepper, left (k) for the
  // explicit porous stepper. F is always evaluated on step k.
  double uv_integral = 0.0;      // sum dt Int U_end V_end
  double u2_left = 0.0;          // sum dt Int U_k^2
  double u2_right = 0.0;         // sum dt Int U_{k+1}^2
  double v_int_integral = 0.0;   // sum dt Int V_end
  double f_mean_integral = 0.0;  // sum dt <F_k>
  double v_mean_integral = 0.0;  // sum dt <V_end>
  double f_l1_integral = 0.0;    // sum dt ||B - F_k||_1 (the raw source)
  double k_f_part = 0.0;         // sum dt <F_k>  (B|Omega| t_end + Int U0)
  double k_v_part = 0.0;         // sum dt <V_end>(B|Omega| t_end + Int U0)
  double min_f = 0.0;            // min over steps and cells of F_k
  double max_abs_f = 0.0;
  double min_v_minus_au = 0.0;  // min over steps/cells of V_end - a_coef U_end

  // Pierre data (unweighted registrations only): A = V/U with floor.
  Eigen::ArrayXd a_time_integral;  // sum dt A_k(x)
  double a_min = 0.0, a_max = 0.0;

  double u0_l1 = 0.0;   // Int U0 (= ||U0||_1, U0 >= 0)
  double u0_sq = 0.0;   // Int U0^2
  double u0_hm1 = 0.0;  // ||U0||_{H^-1} (Neumann mesh; 0 on Dirichlet)
  double uT_hm1 = 0.0;

  // chain series (length = step count) when reg.chain is set
  std::vector<double> chain_t, chain_dt;
  std::vector<double> phi_max, phi_l2, f_mean, v_mean_end, f_src_l1;
};

struct Trajectory {
  Grid grid;
  SystemSpec system;
  double n_trunc = 0.0;
  StepControls controls;
  bool porous_mode = false;

  // per-state series, length steps()+1
  std::vector<double> t;
  std::vector<std::vector<double>> mass, l2, umin, umax;  // [species][state]

  // per-step series, length steps()
  std::vector<double> dt;
  std::vector<std::vector<double>> f_int, f_l1, clip;  // [species][step]

  // reaction-budget identity pieces for the S-type systems:
  // sum dt Int (forward monomial)/denom and (backward monomial)/denom
  double rate_forward_integral = 0.0;
  double rate_backward_integral = 0.0;

  // porous diagnostics
  std::vector<double> lmi_budget;                  // sum dt Int u_i^{m_i+1}
  std::vector<double> lukkari_b1, lukkari_bmid;    // sum dt Int |grad u^m|^beta
  std::vector<double> lukkari_beta;                // the second exponent used

  double clip_total = 0.0;
  std::vector<double> clip_species_total;
  double clip_tolerance_used = 0.0;
  bool clip_exceeded = false;
  double min_dt_used = 0.0;

  State initial, final_state;
  std::vector<State> snapshots;
  std::vector<long> snapshot_steps;

  std::vector<RegistrationResult> registrations;

  long steps() const { return static_cast<long>(dt.size()); }
  const RegistrationResult& registration(const std::string& name) const;
  bool has_registration(const std::string& name) const;
};

/// Optional extra source g_i(t,x) added to the truncated reaction
/// (used by the forced single-equation audits). Receives preallocated
/// per-species arrays already holding the reaction values; adds into them.
using SourceFn =
    std::function<void(double t, const Grid& g, std::vector<Eigen::ArrayXd>& rhs)>;

/// Integrates the truncated system to controls.T, accumulating diagnostics
/// and the registered (U,V) series. Deterministic given its inputs.
/// Semilinear (all m_i = 1): IMEX with implicit diffusion, explicit truncated
/// reaction, production-loss clipping at zero with a recorded budget.
/// Porous (some m_i > 1, Dirichlet only): explicit conservative flux update
/// with a per-step CFL bound  dt <= cfl / (sum_a 2/h_a^2 * max_i d_i m_i
/// (max u_i)^{m_i - 1}).
Trajectory run(const SystemSpec& sys, double n, const State& u0, const StepControls& controls,
               std::vector<UVRegistration> regs = {}, const SourceFn& source = nullptr);

/// Reaction-only reference: classical RK4 on dr/dt = f(r) (untruncated) with
/// at least 1e4 substeps. Test oracle; stages are clamped at zero.
Eigen::VectorXd reaction_ode_oracle(const ReactionSpec& spec, Eigen::VectorXd r0, double T,
                                    long substeps, double blowup_threshold = 1e8);

}  // namespace rdaudit
