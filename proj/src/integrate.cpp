#include "rdaudit/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdaudit {

namespace {

constexpr int kMaxSpecies = 16;
constexpr int kMaxHalvings = 20;

double cfl_dt_bound(const Grid& g, const SystemSpec& sys,
                    const std::vector<Eigen::ArrayXd>& u, double cfl) {
  double maxfac = 0.0;
  for (int i = 0; i < sys.species(); ++i) {
    const double mi = sys.mexp[i];
    const double umax = u[i].maxCoeff();
    const double fac = sys.d[i] * mi * (mi == 1.0 ? 1.0 : std::pow(umax, mi - 1.0));
    maxfac = std::max(maxfac, fac);
  }
  double denom = 0.0;
  for (int a = 0; a < g.dim(); ++a) denom += 2.0 / (g.h(a) * g.h(a));
  if (maxfac * denom == 0.0) return std::numeric_limits<double>::infinity();
  return cfl / (denom * maxfac);
}

struct RegWork {
  RegistrationResult res;
  Eigen::ArrayXd u_cur;  // U at the current state
  Eigen::ArrayXd w_cur;  // lifted potential, chain mode
  bool chain_active = false;
};

double weight_at(const UVRegistration& reg, double elapsed) {
  return reg.time_decay == 0.0 ? 1.0 : std::exp(-reg.time_decay * elapsed);
}

Eigen::ArrayXd combine(const Eigen::VectorXd& wts, const std::vector<Eigen::ArrayXd>& u,
                       double scale) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(u[0].size());
  for (int i = 0; i < wts.size(); ++i)
    if (wts[i] != 0.0) out += wts[i] * u[i];
  return scale * out;
}

Eigen::ArrayXd combine_pow(const UVRegistration& reg, const SystemSpec& sys,
                           const std::vector<Eigen::ArrayXd>& u, double scale) {
  if (!reg.v_uses_mexp) return combine(reg.v_weights, u, scale);
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(u[0].size());
  for (int i = 0; i < reg.v_weights.size(); ++i) {
    if (reg.v_weights[i] == 0.0) continue;
    const double mi = sys.mexp[i];
    if (mi == 1.0)
      out += reg.v_weights[i] * u[i];
    else
      out += reg.v_weights[i] * u[i].pow(mi);
  }
  return scale * out;
}

}  // namespace

UVRegistration mass_registration(const SystemSpec& sys, bool chain) {
  const Eigen::VectorXd& a = sys.reaction.mass_vector();
  UVRegistration reg;
  reg.name = "mass";
  reg.u_weights = a;
  reg.v_weights = a.cwiseProduct(sys.d);
  reg.v_uses_mexp = sys.porous();
  reg.a_coef = sys.d.minCoeff();
  reg.chain = chain;
  if (sys.reaction.mass_class().kind == MassClass::MPrime) {
    const double c0 = sys.reaction.mass_class().c0;
    if (a.minCoeff() < 1.0)
      throw std::invalid_argument(
          "mass_registration: the (M') Gronwall form needs min a_i >= 1; rescale a and C0");
    reg.B = c0 * a.sum();
    reg.time_decay = c0;
  }
  return reg;
}

const RegistrationResult& Trajectory::registration(const std::string& name) const {
  for (const RegistrationResult& r : registrations)
    if (r.reg.name == name) return r;
  throw std::invalid_argument("Trajectory: no registration named '" + name + "'");
}

bool Trajectory::has_registration(const std::string& name) const {
  for (const RegistrationResult& r : registrations)
    if (r.reg.name == name) return true;
  return false;
}

Trajectory run(const SystemSpec& sys, double n, const State& u0, const StepControls& controls,
               std::vector<UVRegistration> regs, const SourceFn& source) {
  const Grid& g = state_grid(u0);
  const int m = sys.species();
  const int N = g.cell_count();
  if (static_cast<int>(u0.species.size()) != m)
    throw std::invalid_argument("run: state species count does not match the system");
  if (m > kMaxSpecies) throw std::invalid_argument("run: too many species");
  for (const Field& f : u0.species)
    if ((f.values() < 0.0).any())
      throw std::invalid_argument("run: initial state must be nonnegative");
  if (!(controls.T >= 0.0)) throw std::invalid_argument("run: T must be >= 0");
  if (!(controls.cfl > 0.0 && controls.cfl <= 1.0))
    throw std::invalid_argument("run: cfl must lie in (0,1]");
  if (controls.dt && !(*controls.dt > 0.0))
    throw std::invalid_argument("run: dt must be positive");

  const bool porous = sys.porous();
  if (porous && g.bc() != Bc::Dirichlet)
    throw std::invalid_argument("run: the porous stepper requires a Dirichlet grid");
  if (!porous && !controls.dt)
    throw std::invalid_argument("run: the semilinear stepper needs an explicit dt");

  TruncatedReaction trunc(sys.reaction, n);
  State init = truncate_state(u0, n);

  Trajectory traj;
  traj.grid = g;
  traj.system = sys;
  traj.n_trunc = n;
  traj.controls = controls;
  traj.porous_mode = porous;
  traj.initial = init;
  traj.mass.assign(m, {});
  traj.l2.assign(m, {});
  traj.umin.assign(m, {});
  traj.umax.assign(m, {});
  traj.f_int.assign(m, {});
  traj.f_l1.assign(m, {});
  traj.clip.assign(m, {});
  traj.clip_species_total.assign(m, 0.0);
  traj.lmi_budget.assign(m, 0.0);
  traj.lukkari_b1.assign(m, 0.0);
  traj.lukkari_bmid.assign(m, 0.0);
  traj.lukkari_beta.assign(m, 0.0);
  for (int i = 0; i < m; ++i)
    traj.lukkari_beta[i] = 1.0 + 1.0 / (2.0 * (1.0 + sys.mexp[i] * g.dim()));

  const double vol = g.cell_volume();
  const double t0 = init.t;
  const double T_end = t0 + controls.T;
  const double eps_t = 1e-12 * std::max(1.0, std::abs(T_end));

  std::vector<Eigen::ArrayXd> u(m), unew(m), gg(m), wpow(m), diff(m);
  for (int i = 0; i < m; ++i) {
    u[i] = init.species[i].values();
    unew[i].resize(N);
    gg[i].resize(N);
  }

  double initial_mass = 0.0;
  for (int i = 0; i < m; ++i) initial_mass += u[i].sum() * vol;
  const double clip_tol = controls.clip_tolerance.value_or(1e-10 * initial_mass);
  traj.clip_tolerance_used = clip_tol;

  // base step and snapshot schedule
  double dt_base;
  if (!porous) {
    dt_base = *controls.dt;
  } else {
    const double cfl_dt = cfl_dt_bound(g, sys, u, controls.cfl);
    dt_base = controls.dt ? std::min(*controls.dt, cfl_dt) : cfl_dt;
    if (!std::isfinite(dt_base)) dt_base = controls.T > 0.0 ? controls.T / 1000.0 : 1.0;
  }
  const double snap_interval = controls.snapshot_stride * dt_base;

  const Eigen::SparseMatrix<double> lap = neg_laplacian_matrix(g, g.bc());

  // registrations
  std::vector<RegWork> work(regs.size());
  std::unique_ptr<PoissonSolver> lift;
  const bool neumann = g.bc() == Bc::Neumann;
  for (std::size_t j = 0; j < regs.size(); ++j) {
    UVRegistration reg = regs[j];
    if (reg.u_weights.size() != m || reg.v_weights.size() != m)
      throw std::invalid_argument("run: registration weights must have one entry per species");
    RegWork& rw = work[j];
    rw.res.reg = reg;
    rw.chain_active = reg.chain && neumann;
    if (rw.chain_active && !lift) lift = std::make_unique<PoissonSolver>(with_bc(g, Bc::Neumann));
    rw.u_cur = combine(reg.u_weights, u, weight_at(reg, 0.0));
    rw.res.u0_l1 = rw.u_cur.sum() * vol;
    rw.res.u0_sq = rw.u_cur.square().sum() * vol;
    rw.res.min_f = std::numeric_limits<double>::infinity();
    rw.res.min_v_minus_au = std::numeric_limits<double>::infinity();
    rw.res.a_min = std::numeric_limits<double>::infinity();
    rw.res.a_max = -std::numeric_limits<double>::infinity();
    rw.res.a_time_integral = Eigen::ArrayXd::Zero(N);
    if (neumann) {
      if (!lift) lift = std::make_unique<PoissonSolver>(with_bc(g, Bc::Neumann));
      rw.res.u0_hm1 = std::sqrt(grad_energy(Field(lift->grid(), lift->solve(rw.u_cur)),
                                            Bc::Neumann));
      if (rw.chain_active) rw.w_cur = lift->solve(rw.u_cur);
    }
    {
      const Eigen::ArrayXd v0 = combine_pow(reg, sys, u, weight_at(reg, 0.0));
      rw.res.min_v_minus_au =
          std::min(rw.res.min_v_minus_au, (v0 - reg.a_coef * rw.u_cur).minCoeff());
    }
  }

  // Pierre A floor: 1e-14 * initial max of the canonical U
  std::vector<double> a_floor(regs.size(), 1e-300);
  for (std::size_t j = 0; j < regs.size(); ++j) {
    const double u0max = work[j].u_cur.maxCoeff();
    if (u0max > 0.0) a_floor[j] = 1e-14 * u0max;
  }

  auto push_state = [&](double tcur) {
    traj.t.push_back(tcur);
    for (int i = 0; i < m; ++i) {
      traj.mass[i].push_back(u[i].sum() * vol);
      traj.l2[i].push_back(std::sqrt(u[i].square().sum() * vol));
      traj.umin[i].push_back(u[i].minCoeff());
      traj.umax[i].push_back(u[i].maxCoeff());
    }
  };
  auto make_snapshot = [&](double tcur, long step) {
    if (!controls.store_snapshots) return;
    std::vector<Field> fields;
    fields.reserve(m);
    for (int i = 0; i < m; ++i) fields.emplace_back(g, u[i]);
    traj.snapshots.push_back(make_state(tcur, std::move(fields)));
    traj.snapshot_steps.push_back(step);
  };

  push_state(t0);
  make_snapshot(t0, 0);

  // implicit-diffusion cache, rebuilt when dt changes
  std::vector<std::unique_ptr<ImplicitDiffusion>> imex(m);
  double cached_dt = -1.0;
  auto ensure_imex = [&](double dtk) {
    if (dtk == cached_dt) return;
    for (int i = 0; i < m; ++i)
      imex[i] = std::make_unique<ImplicitDiffusion>(g, g.bc(), sys.d[i], dtk);
    cached_dt = dtk;
  };

  double t = t0;
  long step = 0;
  long snap_idx = 1;
  traj.min_dt_used = std::numeric_limits<double>::infinity();
  double rbuf[kMaxSpecies], fbuf[kMaxSpecies];
  const bool rate_split = sys.reaction.has_rate_split();

  while (t < T_end - eps_t) {
    if (step >= controls.max_steps)
      throw numerical_error("run: max_steps exceeded at t = " + std::to_string(t));

    // nominal dt, clamped to the next snapshot/horizon stop
    double dtn = dt_base;
    if (porous) {
      const double bound = cfl_dt_bound(g, sys, u, controls.cfl);
      dtn = std::min(controls.dt ? *controls.dt : bound, bound);
      if (!std::isfinite(dtn)) dtn = dt_base;
    }
    double next_stop = T_end;
    if (snap_interval > 0.0 && controls.store_snapshots)
      next_stop = std::min(T_end, t0 + snap_idx * snap_interval);
    dtn = std::min(dtn, next_stop - t);
    if (std::abs(dtn - dt_base) <= 1e-12 * dt_base) dtn = dt_base;
    if (!(dtn > 0.0))
      throw numerical_error("run: time step collapsed at t = " + std::to_string(t));

    // truncated reaction at the left state (+ optional source)
    double sum_fwd = 0.0, sum_bwd = 0.0;
    for (int c = 0; c < N; ++c) {
      for (int i = 0; i < m; ++i) rbuf[i] = u[i][c];
      double denom;
      trunc.evaluate_raw(rbuf, fbuf, denom);
      for (int i = 0; i < m; ++i) gg[i][c] = fbuf[i];
      if (rate_split) {
        double fw, bw;
        sys.reaction.rate_split_raw(rbuf, fw, bw);
        sum_fwd += fw / denom;
        sum_bwd += bw / denom;
      }
    }
    if (source) source(t, g, gg);

    // porous diffusion term (state-only, reusable across dt retries)
    if (porous) {
      for (int i = 0; i < m; ++i) {
        const double mi = sys.mexp[i];
        wpow[i] = mi == 1.0 ? u[i] : u[i].pow(mi);
        diff[i] = sys.d[i] == 0.0
                      ? Eigen::ArrayXd::Zero(N)
                      : Eigen::ArrayXd(-sys.d[i] * (lap * wpow[i].matrix()).array());
      }
    }

    // positivity: explicit update, clip at zero, halve dt while the clipped
    // mass would be a material fraction of the budget
    double dtk = dtn;
    std::vector<double> clip_i(m, 0.0);
    int halvings = 0;
    for (;;) {
      double clip_step = 0.0;
      for (int i = 0; i < m; ++i) {
        unew[i] = u[i] + dtk * gg[i];
        if (porous) unew[i] += dtk * diff[i];
        clip_i[i] = -unew[i].min(0.0).sum() * vol;
        clip_step += clip_i[i];
      }
      const double threshold =
          std::max(clip_tol * (controls.T > 0.0 ? dtk / controls.T : 1.0), 1e-3 * clip_tol);
      if (clip_step <= threshold || halvings >= kMaxHalvings) break;
      dtk *= 0.5;
      ++halvings;
    }
    for (int i = 0; i < m; ++i) unew[i] = unew[i].max(0.0);

    if (!porous) {
      ensure_imex(dtk);
      for (int i = 0; i < m; ++i) unew[i] = imex[i]->solve(unew[i]);
    }

    double t_next = t + dtk;
    if (next_stop - t_next <= eps_t) t_next = next_stop;

    for (int i = 0; i < m; ++i) {
      const double mx = unew[i].maxCoeff();
      if (!(mx <= controls.blowup_threshold))
        throw blowup_error("run: species " + std::to_string(i) + " reached " +
                               std::to_string(mx) + " at step " + std::to_string(step) +
                               ", t = " + std::to_string(t_next),
                           step, t_next);
    }

    // accept the step
    traj.dt.push_back(dtk);
    traj.min_dt_used = std::min(traj.min_dt_used, dtk);
    for (int i = 0; i < m; ++i) {
      traj.f_int[i].push_back(gg[i].sum() * vol);
      traj.f_l1[i].push_back(gg[i].abs().sum() * vol);
      traj.clip[i].push_back(clip_i[i]);
      traj.clip_species_total[i] += clip_i[i];
      traj.clip_total += clip_i[i];
    }
    if (rate_split) {
      traj.rate_forward_integral += dtk * sum_fwd * vol;
      traj.rate_backward_integral += dtk * sum_bwd * vol;
    }
    if (porous) {
      for (int i = 0; i < m; ++i) {
        traj.lmi_budget[i] += dtk * (u[i] * wpow[i]).sum() * vol;
        Field wf(g, wpow[i]);
        traj.lukkari_b1[i] += dtk * grad_lbeta(wf, g.bc(), 1.0);
        traj.lukkari_bmid[i] += dtk * grad_lbeta(wf, g.bc(), traj.lukkari_beta[i]);
      }
    }

    // registrations
    for (std::size_t j = 0; j < work.size(); ++j) {
      RegWork& rw = work[j];
      const UVRegistration& reg = rw.res.reg;
      const double w_next = weight_at(reg, t_next - t0);
      const Eigen::ArrayXd u_next = combine(reg.u_weights, unew, w_next);
      // scheme endpoint of V: implicit -> new state, explicit -> old state
      const Eigen::ArrayXd v_end = porous ? combine_pow(reg, sys, u, weight_at(reg, t - t0))
                                          : combine_pow(reg, sys, unew, w_next);
      const double t_end = porous ? t - t0 : t_next - t0;
      const Eigen::ArrayXd f_k =
          reg.B - (u_next - rw.u_cur) / dtk - (lap * v_end.matrix()).array();

      const double mean_f = f_k.sum() * vol / g.measure();
      const double mean_v = v_end.sum() * vol / g.measure();
      const double mass_factor = reg.B * g.measure() * t_end + rw.res.u0_l1;

      RegistrationResult& rr = rw.res;
      rr.uv_integral += dtk * ((porous ? rw.u_cur : u_next) * v_end).sum() * vol;
      rr.u2_left += dtk * rw.u_cur.square().sum() * vol;
      rr.u2_right += dtk * u_next.square().sum() * vol;
      rr.v_int_integral += dtk * v_end.sum() * vol;
      rr.f_mean_integral += dtk * mean_f;
      rr.v_mean_integral += dtk * mean_v;
      rr.f_l1_integral += dtk * (reg.B - f_k).abs().sum() * vol;
      rr.k_f_part += dtk * mean_f * mass_factor;
      rr.k_v_part += dtk * mean_v * mass_factor;
      rr.min_f = std::min(rr.min_f, f_k.minCoeff());
      rr.max_abs_f = std::max(rr.max_abs_f, f_k.abs().maxCoeff());
      rr.min_v_minus_au =
          std::min(rr.min_v_minus_au, (v_end - reg.a_coef * (porous ? rw.u_cur : u_next)).minCoeff());

      if (reg.time_decay == 0.0) {
        // Pierre A = V/U at the left endpoint, floored where U ~ 0
        const Eigen::ArrayXd v_left = porous ? v_end : combine_pow(reg, sys, u, 1.0);
        Eigen::ArrayXd a_field =
            (rw.u_cur > a_floor[j]).select(v_left / rw.u_cur.max(a_floor[j]), reg.a_coef);
        rr.a_min = std::min(rr.a_min, a_field.minCoeff());
        rr.a_max = std::max(rr.a_max, a_field.maxCoeff());
        rr.a_time_integral += dtk * a_field;
      }

      if (rw.chain_active) {
        Eigen::ArrayXd w_new = lift->solve(u_next);
        Eigen::ArrayXd phi = (w_new - rw.w_cur) / dtk + v_end;
        rr.chain_t.push_back(t - t0);
        rr.chain_dt.push_back(dtk);
        rr.phi_max.push_back(phi.maxCoeff());
        rr.phi_l2.push_back(std::sqrt(phi.square().sum() * vol));
        rr.f_mean.push_back(mean_f);
        rr.v_mean_end.push_back(mean_v);
        rr.f_src_l1.push_back((reg.B - f_k).abs().sum() * vol);
        rw.w_cur = std::move(w_new);
      }
      rw.u_cur = u_next;
    }

    for (int i = 0; i < m; ++i) u[i].swap(unew[i]);
    t = t_next;
    ++step;
    push_state(t);

    if (controls.store_snapshots && snap_interval > 0.0 &&
        t >= t0 + snap_idx * snap_interval - eps_t && t < T_end - eps_t) {
      make_snapshot(t, step);
      while (t >= t0 + snap_idx * snap_interval - eps_t) ++snap_idx;
    }
  }

  if (traj.clip_total > clip_tol) traj.clip_exceeded = true;
  if (!std::isfinite(traj.min_dt_used)) traj.min_dt_used = 0.0;

  {
    std::vector<Field> fields;
    fields.reserve(m);
    for (int i = 0; i < m; ++i) fields.emplace_back(g, u[i]);
    traj.final_state = make_state(T_end, std::move(fields));
  }
  if (controls.store_snapshots &&
      (traj.snapshots.empty() || traj.snapshots.back().t < T_end - eps_t)) {
    traj.snapshots.push_back(traj.final_state);
    traj.snapshot_steps.push_back(step);
  }

  for (std::size_t j = 0; j < work.size(); ++j) {
    if (neumann)
      work[j].res.uT_hm1 = std::sqrt(
          grad_energy(Field(lift->grid(), lift->solve(work[j].u_cur)), Bc::Neumann));
    traj.registrations.push_back(std::move(work[j].res));
  }
  return traj;
}

Eigen::VectorXd reaction_ode_oracle(const ReactionSpec& spec, Eigen::VectorXd r0, double T,
                                    long substeps, double blowup_threshold) {
  const int m = spec.species();
  if (r0.size() != m) throw std::invalid_argument("reaction_ode_oracle: wrong state size");
  if ((r0.array() < 0.0).any())
    throw std::invalid_argument("reaction_ode_oracle: r0 must be nonnegative");
  if (!(T >= 0.0)) throw std::invalid_argument("reaction_ode_oracle: T must be >= 0");
  substeps = std::max<long>(substeps, 10000);
  const double dt = T / static_cast<double>(substeps);

  Eigen::ArrayXd r = r0.array(), k1(m), k2(m), k3(m), k4(m), tmp(m);
  auto eval = [&](const Eigen::ArrayXd& x, Eigen::ArrayXd& out) {
    tmp = x.max(0.0);
    spec.evaluate_raw(tmp.data(), out.data());
  };
  for (long s = 0; s < substeps; ++s) {
    eval(r, k1);
    eval(r + 0.5 * dt * k1, k2);
    eval(r + 0.5 * dt * k2, k3);
    eval(r + dt * k3, k4);
    r += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r = r.max(0.0);
    if (r.maxCoeff() > blowup_threshold)
      throw blowup_error("reaction_ode_oracle: blow-up", s, (s + 1) * dt);
  }
  return r.matrix();
}

}  // namespace rdaudit
