#include "rdaudit/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace rdaudit {

namespace {

namespace fs = std::filesystem;

std::string place(const std::string& out_dir, const std::string& configured) {
  if (out_dir.empty() || configured.empty()) return configured;
  return (fs::path(out_dir) / fs::path(configured).filename()).string();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const Trajectory& traj) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw config_error("output: cannot write '" + path + "'");
  out << "step,t,dt,species,mass,l2,min,max,f_l1,clipped\n";
  const int m = traj.system.species();
  TruncatedReaction trunc(traj.system.reaction, traj.n_trunc);
  // cumulative clipped mass per species
  std::vector<std::vector<double>> clip_cum(m);
  for (int i = 0; i < m; ++i) {
    clip_cum[i].resize(traj.steps() + 1, 0.0);
    for (long k = 0; k < traj.steps(); ++k)
      clip_cum[i][k + 1] = clip_cum[i][k] + traj.clip[i][k];
  }
  const double vol = traj.grid.cell_volume();
  double rbuf[16], fbuf[16];
  for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
    const long k = traj.snapshot_steps[s];
    const State& st = traj.snapshots[s];
    const double dtk = k == 0 ? 0.0 : traj.dt[k - 1];
    // |f^n| at the snapshot state (the step series holds left-state values)
    std::vector<double> fl1(m, 0.0);
    if (k < traj.steps()) {
      for (int i = 0; i < m; ++i) fl1[i] = traj.f_l1[i][k];
    } else {
      for (int c = 0; c < traj.grid.cell_count(); ++c) {
        for (int i = 0; i < m; ++i) rbuf[i] = st.species[i].values()[c];
        trunc.evaluate_raw(rbuf, fbuf);
        for (int i = 0; i < m; ++i) fl1[i] += std::abs(fbuf[i]) * vol;
      }
    }
    for (int i = 0; i < m; ++i) {
      out << k << ',' << fmt(st.t) << ',' << fmt(dtk) << ',' << i << ','
          << fmt(traj.mass[i][k]) << ',' << fmt(traj.l2[i][k]) << ','
          << fmt(traj.umin[i][k]) << ',' << fmt(traj.umax[i][k]) << ',' << fmt(fl1[i])
          << ',' << fmt(clip_cum[i][k]) << "\n";
    }
  }
}

void append_assumption_rows(std::vector<EstimateAudit>& rows, const ExperimentConfig& cfg) {
  AssumptionReport rep = verify_assumptions(cfg.system.reaction, 200, cfg.system.mexp);
  auto flag = [&](const std::string& name, bool ok, bool checked = true) {
    EstimateAudit a;
    a.name = name;
    if (!checked) {
      a.status = AuditStatus::Inapplicable;
      a.note = "no class declared";
    } else {
      a.status = ok ? AuditStatus::Pass : AuditStatus::Fail;
      if (!ok && !rep.violations.empty()) {
        std::ostringstream os;
        os << "violated at r=(";
        const Eigen::VectorXd& r = rep.violations.front().r;
        for (int i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << ")";
        a.note = os.str();
      }
    }
    rows.push_back(std::move(a));
  };
  flag("assumption_P", rep.quasi_positive);
  flag("assumption_mass", rep.mass_ok);
  flag("assumption_growth", rep.growth_ok, rep.growth_checked);
  if (cfg.system.reaction.kind() == ReactionSpec::Kind::LotkaVolterra)
    flag("assumption_lv_nsd", rep.lv_matrix_ok);
}

}  // namespace

bool RunReport::all_pass() const {
  for (const EstimateAudit& a : audits)
    if (a.status == AuditStatus::Fail) return false;
  return true;
}

std::string RunReport::to_text() const {
  std::ostringstream os;
  os << "# rdaudit run report\n";
  os << "status: " << (all_pass() ? "pass" : "FAIL") << "\n";
  os << "steps: " << steps << "  min_dt: " << fmt(min_dt) << "  clip: " << fmt(clip_total)
     << (clip_exceeded ? "  CLIP-BUDGET-EXCEEDED" : "") << "\n";
  os << "wall_seconds: " << wall_seconds << "\n\n";
  os << "## audits\n";
  for (const EstimateAudit& a : audits) {
    os << a.name << "  " << fmt(a.lhs) << "  " << fmt(a.rhs) << "  " << fmt(a.margin())
       << "  " << to_string(a.status);
    for (const auto& [k, v] : a.constants) os << "  " << k << "=" << fmt(v);
    if (!a.note.empty()) os << "  # " << a.note;
    os << "\n";
  }
  os << "\n## config\n" << config_echo.dump(2) << "\n";
  return os.str();
}

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!out_dir.empty()) fs::create_directories(out_dir);

  auto wants = [&](const std::string& name) {
    for (const std::string& a : cfg.audits)
      if (a == name) return true;
    return false;
  };
  const bool need_chain = wants("key_estimate") || wants("no_sign");
  const bool need_dc = wants("key_estimate") || wants("porous") || wants("porous_stability");

  State u0 = build_initial_state(cfg);
  std::vector<UVRegistration> regs = {mass_registration(cfg.system, need_chain)};
  Trajectory traj = run(cfg.system, cfg.n_trunc, u0, cfg.controls, regs);

  std::unique_ptr<DomainConstants> dc;
  if (need_dc) dc = std::make_unique<DomainConstants>(domain_constants(cfg.grid));

  RunReport rep;
  rep.config_echo = cfg.echo;
  append_assumption_rows(rep.audits, cfg);

  auto add = [&](std::vector<EstimateAudit> rows) {
    for (EstimateAudit& a : rows) rep.audits.push_back(std::move(a));
  };

  for (const std::string& name : cfg.audits) {
    if (name == "mass" || name == "gronwall") {
      add(mass_audit(traj).audits);
    } else if (name == "conservation") {
      auto combos = builtin_conservation_combos(cfg.system.reaction);
      if (combos.empty())
        rep.audits.push_back(
            inapplicable_audit("conservation", "no exact built-in conservation laws"));
      else
        add(conservation_audit(traj, combos));
    } else if (name == "key_estimate") {
      add(key_estimate_audit(traj, *dc));
    } else if (name == "pierre_l2") {
      add(pierre_l2_audit(traj));
    } else if (name == "no_sign") {
      const double c_cal = no_sign_calibrate(cfg.grid);
      add(no_sign_audit(traj, c_cal));
    } else if (name == "reaction_l1") {
      add(reaction_l1_budget(traj));
    } else if (name == "reaction_l1_stability" || name == "porous_stability") {
      Trajectory traj2 =
          run(cfg.system, 2.0 * cfg.n_trunc, u0, cfg.controls, {mass_registration(cfg.system)});
      add(budget_stability(traj, traj2));
    } else if (name == "porous") {
      add(porous_audit(traj, *dc));
    }
  }

  write_csv(place(out_dir, cfg.output.csv), traj);
  if (!cfg.output.snapshots.empty())
    write_snapshot_series(place(out_dir, cfg.output.snapshots), cfg.grid, traj.snapshots);

  rep.steps = traj.steps();
  rep.min_dt = traj.min_dt_used;
  rep.clip_total = traj.clip_total;
  rep.clip_exceeded = traj.clip_exceeded;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  const std::string report_path = place(out_dir, cfg.output.report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw config_error("output: cannot write '" + report_path + "'");
    out << rep.to_text();
  }
  return rep;
}

RunReport audit_snapshots(const ExperimentConfig& cfg, const std::string& snapshot_path,
                          const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<State> snaps = read_snapshot_series(snapshot_path, cfg.grid);
  if (snaps.size() < 2) throw config_error("audit: need at least two snapshots");

  RunReport rep;
  rep.config_echo = cfg.echo;
  append_assumption_rows(rep.audits, cfg);

  const int m = cfg.system.species();
  const Eigen::VectorXd& a = cfg.system.reaction.mass_vector();
  auto combo_mass = [&](const State& s, const Eigen::VectorXd& w) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += w[i] * integrate(s.species[i]);
    return acc;
  };

  // snapshot-level mass monotonicity / conservation
  const double m0 = combo_mass(snaps.front(), a);
  if (cfg.system.reaction.mass_class().kind == MassClass::M) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < snaps.size(); ++s)
      worst = std::max(worst, combo_mass(snaps[s + 1], a) - combo_mass(snaps[s], a));
    EstimateAudit mono =
        make_audit("mass_nonincreasing", worst, 0.0, 1e-8 * std::max(1.0, m0));
    mono.note = "snapshot series";
    rep.audits.push_back(mono);
  } else {
    const double c0 = cfg.system.reaction.mass_class().c0;
    const double B = c0 * a.sum();
    const double T = snaps.back().t - snaps.front().t;
    double worst = -std::numeric_limits<double>::infinity();
    for (const State& s : snaps) worst = std::max(worst, combo_mass(s, a));
    const double rhs = std::exp(c0 * T) * (m0 + B * cfg.grid.measure() * T);
    EstimateAudit gr = make_audit("mass_gronwall", worst, rhs, default_tol(rhs));
    gr.note = "snapshot series";
    rep.audits.push_back(gr);
  }
  for (const auto& [name, w] : builtin_conservation_combos(cfg.system.reaction)) {
    const double c0 = combo_mass(snaps.front(), w);
    double worst = 0.0;
    for (const State& s : snaps) worst = std::max(worst, std::abs(combo_mass(s, w) - c0));
    EstimateAudit row =
        make_audit("conserved[" + name + "]", worst, 0.0, 1e-9 * std::max(1.0, std::abs(c0)));
    row.note = "snapshot series";
    rep.audits.push_back(row);
  }

  // porous theta bound by snapshot quadrature
  if (cfg.system.porous()) {
    DomainConstants dc = domain_constants(cfg.grid);
    double v_int = 0.0;
    for (std::size_t s = 0; s + 1 < snaps.size(); ++s) {
      const double wt = snaps[s + 1].t - snaps[s].t;
      double v = 0.0;
      for (int i = 0; i < m; ++i) {
        const double mi = cfg.system.mexp[i];
        const Eigen::ArrayXd& ui = snaps[s].species[i].values();
        v += a[i] * cfg.system.d[i] *
             (mi == 1.0 ? ui.sum() : ui.pow(mi).sum()) * cfg.grid.cell_volume();
      }
      v_int += wt * v;
    }
    const double u0l1 = combo_mass(snaps.front(), a);
    EstimateAudit th = make_audit("porous_theta", v_int, dc.theta_inf * u0l1,
                                  default_tol(dc.theta_inf * u0l1));
    th.note = "snapshot quadrature";
    th.constants["theta_inf"] = dc.theta_inf;
    rep.audits.push_back(th);
  }

  rep.audits.push_back(inapplicable_audit("key_estimate", "needs per-step chain data"));
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  const std::string report_path = place(out_dir, cfg.output.report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw config_error("output: cannot write '" + report_path + "'");
    out << rep.to_text();
  }
  return rep;
}

std::string ConvergeReport::to_text() const {
  std::ostringstream os;
  os << "# rdaudit converge report (mode " << mode << ")\n";
  os << "levels:";
  for (double l : levels) os << " " << l;
  os << "\n" << (mode == 'n' ? "D_k:" : "errors:");
  for (double d : distances) os << " " << fmt(d);
  os << "\n";
  if (!orders.empty()) {
    os << "orders:";
    for (double o : orders) os << " " << fmt(o);
    os << "\n";
  }
  os << "status: " << (pass ? "pass" : "FAIL") << "\n";
  return os.str();
}

namespace {

Eigen::ArrayXd restrict_to(const Grid& fine, const Grid& coarse, const Eigen::ArrayXd& v) {
  if (fine.dim() == 1) {
    const int r = fine.cells(0) / coarse.cells(0);
    Eigen::ArrayXd out(coarse.cells(0));
    for (int j = 0; j < coarse.cells(0); ++j) {
      double acc = 0.0;
      for (int k = 0; k < r; ++k) acc += v[j * r + k];
      out[j] = acc / r;
    }
    return out;
  }
  const int rx = fine.cells(0) / coarse.cells(0);
  const int ry = fine.cells(1) / coarse.cells(1);
  Eigen::ArrayXd out(coarse.cell_count());
  for (int jy = 0; jy < coarse.cells(1); ++jy)
    for (int jx = 0; jx < coarse.cells(0); ++jx) {
      double acc = 0.0;
      for (int ky = 0; ky < ry; ++ky)
        for (int kx = 0; kx < rx; ++kx) acc += v[fine.index(jx * rx + kx, jy * ry + ky)];
      out[coarse.index(jx, jy)] = acc / (rx * ry);
    }
  return out;
}

}  // namespace

ConvergeReport run_converge(const ExperimentConfig& cfg, const std::vector<double>& levels,
                            char mode) {
  if (levels.size() < 3) throw config_error("converge: need at least 3 levels");
  for (std::size_t k = 0; k + 1 < levels.size(); ++k)
    if (!(levels[k] < levels[k + 1])) throw config_error("converge: levels must increase");

  ConvergeReport rep;
  rep.mode = mode;
  rep.levels = levels;

  if (mode == 'n') {
    State u0 = build_initial_state(cfg);
    ConvergenceStudy study;
    try {
      study = truncation_convergence_study(cfg.system, u0, cfg.controls, levels);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("converge: ") + e.what());
    }
    rep.distances = study.distances;
    rep.pass = study.pass;
    return rep;
  }
  if (mode != 'h') throw config_error("converge: mode must be 'n' or 'h'");

  if (cfg.init.kind == InitSpec::Kind::RandomUniform ||
      cfg.init.kind == InitSpec::Kind::FromFile)
    throw config_error("converge: h-mode needs analytic initial data");

  std::vector<ExperimentConfig> cfgs;
  for (double lv : levels) {
    const int n0 = static_cast<int>(lv);
    if (n0 != lv || n0 < 4) throw config_error("converge: h-mode levels must be cell counts");
    ExperimentConfig c = cfg;
    std::vector<double> lengths;
    std::vector<int> cells;
    for (int a = 0; a < cfg.grid.dim(); ++a) {
      lengths.push_back(cfg.grid.length(a));
      cells.push_back(n0 * cfg.grid.cells(a) / cfg.grid.cells(0));
    }
    c.grid = make_grid(cfg.grid.dim(), lengths, cells, cfg.grid.bc());
    cfgs.push_back(std::move(c));
  }
  for (std::size_t k = 0; k + 1 < cfgs.size(); ++k)
    if (cfgs[k + 1].grid.cells(0) % cfgs[k].grid.cells(0) != 0)
      throw config_error("converge: each h-level must divide the next");

  std::vector<Trajectory> trajs;
  for (const ExperimentConfig& c : cfgs) {
    StepControls controls = c.controls;
    controls.store_snapshots = false;
    trajs.push_back(run(c.system, c.n_trunc, build_initial_state(c), controls, {}));
  }
  for (std::size_t k = 0; k + 1 < trajs.size(); ++k) {
    const Grid& gc = cfgs[k].grid;
    const Grid& gf = cfgs[k + 1].grid;
    double err = 0.0;
    for (int i = 0; i < cfg.system.species(); ++i) {
      Eigen::ArrayXd r = restrict_to(gf, gc, trajs[k + 1].final_state.species[i].values());
      err += (r - trajs[k].final_state.species[i].values()).abs().sum() * gc.cell_volume();
    }
    rep.distances.push_back(err);
  }
  for (std::size_t k = 0; k + 1 < rep.distances.size(); ++k) {
    const double ratio = levels[k + 1] / levels[k];
    if (rep.distances[k + 1] > 0.0)
      rep.orders.push_back(std::log(rep.distances[k] / rep.distances[k + 1]) /
                           std::log(ratio));
  }
  rep.pass = true;
  return rep;
}

int SweepResult::worst_exit() const {
  int worst = 0;
  for (int e : exit_codes) worst = std::max(worst, e);
  return worst;
}

SweepResult run_sweep(const nlohmann::json& base_config,
                      const std::vector<std::pair<std::string, std::vector<std::string>>>& sets,
                      const std::string& out_dir, int jobs) {
  if (sets.empty()) throw config_error("sweep: need at least one --set");
  // cross product of override assignments
  std::vector<std::vector<std::pair<std::string, std::string>>> combos = {{}};
  for (const auto& [key, values] : sets) {
    if (values.empty()) throw config_error("sweep: empty value list for '" + key + "'");
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& combo : combos)
      for (const std::string& v : values) {
        auto c = combo;
        c.emplace_back(key, v);
        next.push_back(std::move(c));
      }
    combos = std::move(next);
  }

  SweepResult result;
  result.labels.resize(combos.size());
  result.exit_codes.assign(combos.size(), 0);
  result.messages.assign(combos.size(), "");

  auto apply_override = [](nlohmann::json& js, const std::string& dotted,
                           const std::string& value) {
    nlohmann::json* node = &js;
    std::string rest = dotted;
    for (;;) {
      const auto pos = rest.find('.');
      const std::string key = rest.substr(0, pos);
      if (pos == std::string::npos) {
        nlohmann::json parsed;
        try {
          parsed = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception&) {
          parsed = value;  // plain string
        }
        (*node)[key] = parsed;
        return;
      }
      node = &((*node)[key]);
      rest = rest.substr(pos + 1);
    }
  };

  std::atomic<std::size_t> cursor{0};
  const int nthreads =
      jobs > 0 ? jobs
               : std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                 static_cast<unsigned>(combos.size())));
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = cursor.fetch_add(1);
      if (idx >= combos.size()) return;
      std::ostringstream label;
      nlohmann::json js = base_config;
      for (const auto& [k, v] : combos[idx]) {
        apply_override(js, k, v);
        label << (label.tellp() > 0 ? " " : "") << k << "=" << v;
      }
      result.labels[idx] = label.str();
      char sub[32];
      std::snprintf(sub, sizeof(sub), "combo_%03zu", idx);
      const std::string dir =
          out_dir.empty() ? std::string(sub) : (fs::path(out_dir) / sub).string();
      try {
        ExperimentConfig cfg = parse_config(js);
        RunReport rep = run_experiment(cfg, dir);
        result.exit_codes[idx] = rep.exit_code();
        result.messages[idx] = rep.all_pass() ? "pass" : "audit failure";
      } catch (const config_error& e) {
        result.exit_codes[idx] = 5;
        result.messages[idx] = e.what();
      } catch (const blowup_error& e) {
        result.exit_codes[idx] = 3;
        result.messages[idx] = e.what();
      } catch (const numerical_error& e) {
        result.exit_codes[idx] = 4;
        result.messages[idx] = e.what();
      } catch (const std::exception& e) {
        result.exit_codes[idx] = 4;
        result.messages[idx] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  return result;
}

}  // namespace rdaudit
