#include "rdaudit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rdaudit {

std::string to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::Pass: return "pass";
    case AuditStatus::Fail: return "FAIL";
    case AuditStatus::Inapplicable: return "inapplicable";
    case AuditStatus::Info: return "info";
  }
  return "?";
}

double default_tol(double rhs) { return 1e-9 * std::max(1.0, std::abs(rhs)); }

EstimateAudit make_audit(std::string name, double lhs, double rhs, double tol) {
  EstimateAudit a;
  a.name = std::move(name);
  a.lhs = lhs;
  a.rhs = rhs;
  a.tol = tol;
  a.status = (a.margin() >= -tol) ? AuditStatus::Pass : AuditStatus::Fail;
  return a;
}

EstimateAudit info_audit(std::string name, double value, std::string note) {
  EstimateAudit a;
  a.name = std::move(name);
  a.lhs = value;
  a.rhs = value;
  a.status = AuditStatus::Info;
  a.note = std::move(note);
  return a;
}

EstimateAudit inapplicable_audit(std::string name, std::string note) {
  EstimateAudit a;
  a.name = std::move(name);
  a.status = AuditStatus::Inapplicable;
  a.note = std::move(note);
  return a;
}

namespace {

double weighted_clip_total(const Trajectory& traj, const Eigen::VectorXd& w) {
  double c = 0.0;
  for (int i = 0; i < w.size(); ++i)
    c += std::abs(w[i]) * traj.clip_species_total[i];
  return c;
}

double horizon(const Trajectory& traj) { return traj.t.back() - traj.t.front(); }

}  // namespace

MassAuditResult mass_audit(const Trajectory& traj, const std::string& reg_name) {
  const RegistrationResult& rr = traj.registration(reg_name);
  const Eigen::VectorXd& a = rr.reg.u_weights;
  const int m = traj.system.species();
  const long K = traj.steps();
  const double T = horizon(traj);

  MassAuditResult out;
  out.t = traj.t;
  out.combo_mass.resize(K + 1);
  for (long k = 0; k <= K; ++k) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a[i] * traj.mass[i][k];
    out.combo_mass[k] = s;
  }
  const double m0 = out.combo_mass.front();
  const bool mprime = traj.system.reaction.mass_class().kind == MassClass::MPrime;

  if (!mprime) {
    // (M): every increment is at most the clipped mass added that step
    double worst = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < K; ++k) {
      double clip_k = 0.0;
      for (int i = 0; i < m; ++i) clip_k += a[i] * traj.clip[i][k];
      worst = std::max(worst, out.combo_mass[k + 1] - out.combo_mass[k] - clip_k);
    }
    if (K == 0) worst = 0.0;
    EstimateAudit mono = make_audit("mass_nonincreasing", worst, 0.0,
                                    1e-8 * std::max(1.0, m0));
    mono.constants["mass0"] = m0;
    out.audits.push_back(mono);

    double worst_species = 0.0;
    for (int i = 0; i < m; ++i)
      for (long k = 0; k <= K; ++k)
        worst_species = std::max(worst_species, a[i] * traj.mass[i][k]);
    const double clipw = weighted_clip_total(traj, a);
    out.audits.push_back(make_audit("mass_l1_species_bound", worst_species, m0 + clipw,
                                    default_tol(m0)));
  } else {
    const double c0 = traj.system.reaction.mass_class().c0;
    const double B = rr.reg.B;
    double worst = -std::numeric_limits<double>::infinity();
    for (long k = 0; k <= K; ++k) worst = std::max(worst, out.combo_mass[k]);
    const double rhs = std::exp(c0 * T) * (m0 + B * traj.grid.measure() * T);
    const double clipw = weighted_clip_total(traj, a);
    EstimateAudit gr = make_audit("mass_gronwall", worst, rhs,
                                  default_tol(rhs) + std::exp(c0 * T) * clipw);
    gr.constants["C0"] = c0;
    gr.constants["B"] = B;
    out.audits.push_back(gr);
  }

  // exact discrete mean identity <U(T)> = <U0> + B T - Int <F>
  if (traj.grid.bc() == Bc::Neumann) {
    const double wT = rr.reg.time_decay == 0.0 ? 1.0 : std::exp(-rr.reg.time_decay * T);
    double uT = 0.0;
    for (int i = 0; i < m; ++i) uT += a[i] * traj.mass[i][K];
    const double mean_uT = wT * uT / traj.grid.measure();
    const double mean_u0 = rr.u0_l1 / traj.grid.measure();
    const double predicted = mean_u0 + rr.reg.B * T - rr.f_mean_integral;
    const double scale =
        std::max(1.0, std::abs(mean_u0) + rr.reg.B * T + std::abs(rr.f_mean_integral));
    EstimateAudit mi = make_audit("mass_mean_identity", std::abs(mean_uT - predicted), 0.0,
                                  1e-10 * scale);
    mi.constants["B"] = rr.reg.B;
    out.audits.push_back(mi);
  } else {
    out.audits.push_back(
        inapplicable_audit("mass_mean_identity", "Neumann grids only"));
  }
  return out;
}

std::vector<EstimateAudit> conservation_audit(
    const Trajectory& traj,
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& combos) {
  std::vector<EstimateAudit> out;
  const int m = traj.system.species();
  const long K = traj.steps();
  for (const auto& [name, w] : combos) {
    if (w.size() != m) throw std::invalid_argument("conservation_audit: combo size");
    auto combo_at = [&](long k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += w[i] * traj.mass[i][k];
      return s;
    };
    const double c0 = combo_at(0);
    double worst = 0.0;
    for (long k = 0; k <= K; ++k) worst = std::max(worst, std::abs(combo_at(k) - c0));
    const double clipw = weighted_clip_total(traj, w);
    EstimateAudit a = make_audit("conserved[" + name + "]", worst, 0.0,
                                 1e-9 * std::max(1.0, std::abs(c0)) + clipw);
    a.constants["combo0"] = c0;
    out.push_back(a);
  }
  return out;
}

std::vector<std::pair<std::string, Eigen::VectorXd>> builtin_conservation_combos(
    const ReactionSpec& spec) {
  std::vector<std::pair<std::string, Eigen::VectorXd>> out;
  using Kind = ReactionSpec::Kind;
  if (spec.kind() == Kind::SAlphaBetaGamma) {
    out.emplace_back("g*u1+a*u3",
                     Eigen::Vector3d(spec.gamma(), 0.0, spec.alpha()));
    out.emplace_back("g*u2+b*u3", Eigen::Vector3d(0.0, spec.gamma(), spec.beta()));
    out.emplace_back("a_combo", spec.mass_vector());
  } else if (spec.kind() == Kind::SAlphaBetaGammaDelta) {
    out.emplace_back("g*u1+a*u3",
                     Eigen::Vector4d(spec.gamma(), 0.0, spec.alpha(), 0.0));
    out.emplace_back("d*u2+b*u4", Eigen::Vector4d(0.0, spec.delta(), 0.0, spec.beta()));
    out.emplace_back("a_combo", spec.mass_vector());
  }
  return out;
}

std::vector<EstimateAudit> key_estimate_audit(const Trajectory& traj,
                                              const DomainConstants& dc,
                                              const std::string& reg_name) {
  std::vector<EstimateAudit> out;
  if (traj.grid.bc() != Bc::Neumann || traj.porous_mode) {
    out.push_back(inapplicable_audit("key_estimate", "Neumann semilinear runs only"));
    return out;
  }
  const RegistrationResult& rr = traj.registration(reg_name);
  const double C = dc.c_omega;
  const double T = horizon(traj);

  const double f_tol = 1e-8 * std::max(1.0, rr.max_abs_f);
  if (rr.min_f < -f_tol) {
    EstimateAudit a = inapplicable_audit("key_estimate", "F < 0 along the trajectory");
    a.constants["min_F"] = rr.min_f;
    out.push_back(a);
    return out;
  }

  const double clipw = weighted_clip_total(traj, rr.reg.u_weights);
  const double lhs = 0.5 * rr.uT_hm1 * rr.uT_hm1 + rr.uv_integral;
  const double rhs = C * rr.k_f_part + rr.k_v_part + 0.5 * rr.u0_hm1 * rr.u0_hm1;
  EstimateAudit main = make_audit("key_estimate", lhs, rhs,
                                  default_tol(rhs) + 10.0 * (1.0 + C) * (1.0 + T) * clipw);
  main.constants["C_omega"] = C;
  main.constants["B"] = rr.reg.B;
  main.constants["n"] = traj.n_trunc;
  main.constants["T"] = T;
  main.constants["clip"] = traj.clip_total;
  if (traj.clip_total > 0.0) main.note = "clip budget consumed";
  out.push_back(main);

  if (!rr.phi_max.empty()) {
    double worst = -std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (std::size_t k = 0; k < rr.phi_max.size(); ++k) {
      const double bound = C * rr.f_mean[k] + rr.v_mean_end[k];
      worst = std::max(worst, rr.phi_max[k] - bound);
      scale = std::max(scale, std::abs(bound));
    }
    double tol = 1e-9 * scale;
    if (traj.clip_total > 0.0 && traj.min_dt_used > 0.0)
      tol += (1.0 + C) * clipw / (traj.min_dt_used * traj.grid.cell_volume());
    EstimateAudit chain = make_audit("key_estimate_chain", worst, 0.0, tol);
    chain.constants["C_omega"] = C;
    out.push_back(chain);
  }
  return out;
}

std::vector<EstimateAudit> pierre_l2_audit(const Trajectory& traj,
                                           const std::string& reg_name) {
  std::vector<EstimateAudit> out;
  const RegistrationResult& rr = traj.registration(reg_name);
  if (traj.porous_mode || traj.system.reaction.mass_class().kind != MassClass::M ||
      rr.reg.time_decay != 0.0) {
    out.push_back(inapplicable_audit("pierre_l2", "(M)-class semilinear runs only"));
    return out;
  }
  const double a = rr.reg.a_coef;
  const double b = traj.system.d.maxCoeff();
  const double a_int_inf =
      rr.a_time_integral.size() > 0 ? rr.a_time_integral.maxCoeff() : 0.0;
  const double clipw = weighted_clip_total(traj, rr.reg.u_weights);
  const double lhs = a * rr.u2_left;
  const double rhs = a_int_inf * rr.u0_sq;
  EstimateAudit main = make_audit("pierre_l2", lhs, rhs,
                                  default_tol(rhs) + 10.0 * b * (1.0 + horizon(traj)) * clipw);
  main.constants["a"] = a;
  main.constants["b"] = b;
  main.constants["A_int_inf"] = a_int_inf;
  out.push_back(main);

  if (traj.steps() > 0) {
    const double range_violation = std::max(rr.a_max - b, a - rr.a_min);
    EstimateAudit rng =
        make_audit("pierre_A_range", range_violation, 0.0, 1e-12 * std::max(1.0, b));
    rng.constants["A_min"] = rr.a_min;
    rng.constants["A_max"] = rr.a_max;
    out.push_back(rng);
  }
  return out;
}

double no_sign_calibrate(const Grid& g) {
  Grid gn = with_bc(g, Bc::Neumann);
  ReactionSpec zero = ReactionSpec::custom(
      1, {std::vector<PolyTerm>{}}, Eigen::VectorXd::Ones(1), {MassClass::M, 0.0}, {});
  SystemSpec sys = make_system(zero, {1.0}, {1.0});
  State u0 = make_state(0.0, {Field::constant(gn, 1.0)});
  StepControls controls;
  controls.T = 0.5;
  controls.dt = 1e-3;
  controls.store_snapshots = false;
  SourceFn probe = [](double t, const Grid& grid, std::vector<Eigen::ArrayXd>& rhs) {
    const double pi = std::acos(-1.0);
    const double ct = std::cos(t);
    Field f = Field::from_function(grid, [&](double x, double y) {
      double v = std::sin(2.0 * pi * x / grid.length(0));
      if (grid.dim() == 2) v *= std::sin(2.0 * pi * y / grid.length(1));
      return v;
    });
    rhs[0] += ct * f.values();
  };
  Trajectory traj = run(sys, 1.0, u0, controls, {mass_registration(sys, true)}, probe);
  const RegistrationResult& rr = traj.registration("mass");
  double c = 0.0;
  for (std::size_t k = 0; k < rr.phi_l2.size(); ++k) {
    const double denom = rr.f_src_l1[k] + rr.v_mean_end[k];
    if (denom > 1e-12) c = std::max(c, rr.phi_l2[k] / denom);
  }
  return c;
}

std::vector<EstimateAudit> no_sign_audit(const Trajectory& traj, double c_cal,
                                         const std::string& reg_name) {
  std::vector<EstimateAudit> out;
  if (traj.grid.bc() != Bc::Neumann || traj.porous_mode) {
    out.push_back(inapplicable_audit("no_sign", "Neumann semilinear runs only"));
    return out;
  }
  const RegistrationResult& rr = traj.registration(reg_name);
  if (rr.phi_l2.empty()) {
    out.push_back(inapplicable_audit("no_sign", "registration ran without chain solves"));
    return out;
  }
  const double a = rr.reg.a_coef;
  if (rr.min_v_minus_au < -1e-9 * std::max(1.0, a)) {
    EstimateAudit bad = inapplicable_audit("no_sign", "V >= a U violated along the run");
    bad.constants["min_V_minus_aU"] = rr.min_v_minus_au;
    out.push_back(bad);
    return out;
  }
  const double rho_int = rr.f_l1_integral + rr.v_mean_integral;
  const double lhs = a * rr.u2_right;
  const double rhs = c_cal * rho_int * rho_int + rr.u0_hm1 * rr.u0_hm1;
  EstimateAudit main = make_audit("no_sign", lhs, rhs, default_tol(rhs));
  main.constants["C"] = c_cal;
  main.constants["a"] = a;
  main.constants["rho_int"] = rho_int;
  if (rhs > 0.0) main.constants["ratio"] = lhs / rhs;
  out.push_back(main);
  return out;
}

std::vector<EstimateAudit> reaction_l1_budget(const Trajectory& traj) {
  std::vector<EstimateAudit> out;
  const int m = traj.system.species();
  const long K = traj.steps();
  std::vector<double> budget(m, 0.0);
  for (int i = 0; i < m; ++i)
    for (long k = 0; k < K; ++k) budget[i] += traj.dt[k] * traj.f_l1[i][k];
  for (int i = 0; i < m; ++i)
    out.push_back(info_audit("reaction_l1_budget[" + std::to_string(i) + "]", budget[i]));

  if (traj.system.reaction.has_rate_split()) {
    const double gamma = traj.system.reaction.gamma();
    const double m3T = traj.mass[2].back();
    const double m30 = traj.mass[2].front();
    const double left = m3T + gamma * traj.rate_backward_integral;
    const double right =
        m30 + gamma * traj.rate_forward_integral + traj.clip_species_total[2];
    const double scale = std::max(1.0, std::abs(left) + std::abs(right));
    EstimateAudit id = make_audit("reaction_budget_identity", std::abs(left - right), 0.0,
                                  1e-8 * scale);
    id.constants["gamma"] = gamma;
    out.push_back(id);
  }

  // uniform-integrability probe over worst measure-fraction cell sets
  const GrowthSpec& gr = traj.system.reaction.growth();
  if (traj.porous_mode && gr.kind == GrowthClass::SQG && traj.snapshots.size() >= 2) {
    const Grid& g = traj.grid;
    const double vol = g.cell_volume();
    const double qt_measure = horizon(traj) * g.measure();
    TruncatedReaction trunc(traj.system.reaction, traj.n_trunc);
    const std::size_t S = traj.snapshots.size();
    std::vector<std::vector<std::pair<double, double>>> samples(m);  // (|f_i^n|, weight)
    double rbuf[16], fbuf[16];
    for (std::size_t s = 0; s + 1 < S; ++s) {
      const double wt = traj.snapshots[s + 1].t - traj.snapshots[s].t;
      const State& st = traj.snapshots[s];
      for (int c = 0; c < g.cell_count(); ++c) {
        for (int i = 0; i < m; ++i) rbuf[i] = st.species[i].values()[c];
        trunc.evaluate_raw(rbuf, fbuf);
        for (int i = 0; i < m; ++i)
          samples[i].emplace_back(std::abs(fbuf[i]), wt * vol);
      }
    }
    for (int i = 0; i < m; ++i) {
      auto& smp = samples[i];
      std::sort(smp.begin(), smp.end(),
                [](const auto& x, const auto& y) { return x.first > y.first; });
      for (double q : {1e-1, 1e-2, 1e-3}) {
        const double target = q * qt_measure;
        double got = 0.0, integral = 0.0;
        for (const auto& [value, w] : smp) {
          const double take = std::min(w, target - got);
          if (take <= 0.0) break;
          integral += value * take;
          got += take;
        }
        double rhs = gr.c * got;
        for (int j = 0; j < m; ++j) {
          const double mj = traj.system.mexp[j];
          rhs += gr.c * std::pow(std::max(traj.lmi_budget[j], 0.0),
                                 (mj + 1.0 - gr.eps) / (mj + 1.0)) *
                 std::pow(got, gr.eps / (mj + 1.0));
        }
        char name[64];
        std::snprintf(name, sizeof(name), "uniform_integrability[%d,q=%g]", i, q);
        EstimateAudit a = make_audit(name, integral, rhs, default_tol(rhs));
        a.note = "snapshot quadrature";
        a.constants["E_measure"] = got;
        out.push_back(a);
      }
    }
  }
  return out;
}

std::vector<EstimateAudit> budget_stability(const Trajectory& at_n, const Trajectory& at_2n,
                                            double rel_tol) {
  std::vector<EstimateAudit> out;
  const int m = at_n.system.species();
  auto budget_of = [](const Trajectory& tr, int i) {
    double b = 0.0;
    for (long k = 0; k < tr.steps(); ++k) b += tr.dt[k] * tr.f_l1[i][k];
    return b;
  };
  for (int i = 0; i < m; ++i) {
    const double b1 = budget_of(at_n, i);
    const double b2 = budget_of(at_2n, i);
    EstimateAudit a = make_audit("budget_stability_f[" + std::to_string(i) + "]",
                                 std::abs(b2 - b1),
                                 rel_tol * std::max(std::abs(b1), 1e-12), 0.0);
    a.constants["n"] = at_n.n_trunc;
    a.constants["budget_n"] = b1;
    a.constants["budget_2n"] = b2;
    out.push_back(a);
  }
  if (at_n.porous_mode && at_2n.porous_mode) {
    for (int i = 0; i < m; ++i) {
      const double b1 = at_n.lmi_budget[i];
      const double b2 = at_2n.lmi_budget[i];
      EstimateAudit a = make_audit("budget_stability_lmi[" + std::to_string(i) + "]",
                                   std::abs(b2 - b1),
                                   rel_tol * std::max(std::abs(b1), 1e-12), 0.0);
      a.constants["budget_n"] = b1;
      a.constants["budget_2n"] = b2;
      out.push_back(a);
    }
    if (at_n.has_registration("mass") && at_2n.has_registration("mass")) {
      const double b1 = at_n.registration("mass").uv_integral;
      const double b2 = at_2n.registration("mass").uv_integral;
      EstimateAudit a = make_audit("budget_stability_uv", std::abs(b2 - b1),
                                   rel_tol * std::max(std::abs(b1), 1e-12), 0.0);
      a.constants["budget_n"] = b1;
      a.constants["budget_2n"] = b2;
      out.push_back(a);
    }
  }
  return out;
}

std::vector<EstimateAudit> porous_audit(const Trajectory& traj, const DomainConstants& dc,
                                        const std::string& reg_name) {
  std::vector<EstimateAudit> out;
  if (!traj.porous_mode) {
    out.push_back(inapplicable_audit("porous_theta", "porous runs only"));
    return out;
  }
  const RegistrationResult& rr = traj.registration(reg_name);
  const double clipw = weighted_clip_total(traj, rr.reg.u_weights);
  EstimateAudit theta = make_audit("porous_theta", rr.v_int_integral,
                                   dc.theta_inf * rr.u0_l1,
                                   default_tol(dc.theta_inf * rr.u0_l1) +
                                       dc.theta_inf * clipw);
  theta.constants["theta_inf"] = dc.theta_inf;
  theta.constants["U0_l1"] = rr.u0_l1;
  out.push_back(theta);

  out.push_back(info_audit("porous_uv", rr.uv_integral));
  for (int i = 0; i < traj.system.species(); ++i) {
    out.push_back(
        info_audit("porous_lmi[" + std::to_string(i) + "]", traj.lmi_budget[i]));
    out.push_back(
        info_audit("lukkari_b1[" + std::to_string(i) + "]", traj.lukkari_b1[i]));
    EstimateAudit lk = info_audit("lukkari_bmid[" + std::to_string(i) + "]",
                                  traj.lukkari_bmid[i]);
    lk.constants["beta"] = traj.lukkari_beta[i];
    out.push_back(lk);
  }
  return out;
}

ConvergenceStudy truncation_convergence_study(const SystemSpec& sys, const State& u0,
                                              const StepControls& controls,
                                              const std::vector<double>& n_list) {
  if (n_list.size() < 3)
    throw std::invalid_argument("truncation_convergence_study: need at least 3 levels");
  for (std::size_t k = 0; k + 1 < n_list.size(); ++k)
    if (!(n_list[k] < n_list[k + 1]))
      throw std::invalid_argument("truncation_convergence_study: n_list must increase");
  StepControls c = controls;
  c.store_snapshots = true;

  std::vector<Trajectory> trajs;
  trajs.reserve(n_list.size());
  for (double n : n_list) trajs.push_back(run(sys, n, u0, c, {}));

  ConvergenceStudy study;
  study.n_values = n_list;
  const double vol = state_grid(u0).cell_volume();
  for (std::size_t k = 0; k + 1 < trajs.size(); ++k) {
    const auto& ta = trajs[k];
    const auto& tb = trajs[k + 1];
    if (ta.snapshots.size() != tb.snapshots.size())
      throw numerical_error("truncation_convergence_study: snapshot series desynchronized");
    double dist = 0.0;
    for (std::size_t s = 0; s + 1 < ta.snapshots.size(); ++s) {
      const double wt = ta.snapshots[s + 1].t - ta.snapshots[s].t;
      if (std::abs(tb.snapshots[s].t - ta.snapshots[s].t) > 1e-9 * std::max(1.0, ta.snapshots[s].t))
        throw numerical_error("truncation_convergence_study: snapshot times differ");
      for (int i = 0; i < sys.species(); ++i)
        dist += wt * (ta.snapshots[s].species[i].values() -
                      tb.snapshots[s].species[i].values())
                         .abs()
                         .sum() *
                vol;
    }
    study.distances.push_back(dist);
  }
  study.pass = true;
  const std::size_t nd = study.distances.size();
  const std::size_t first = nd > 3 ? nd - 3 : 0;
  for (std::size_t k = first; k + 1 < nd; ++k)
    if (study.distances[k + 1] > study.distances[k] + 1e-12 * std::max(1.0, study.distances[k]))
      study.pass = false;
  return study;
}

}  // namespace rdaudit
