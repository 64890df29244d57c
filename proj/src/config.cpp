#include "rdaudit/config.hpp"

#include <cinttypes>
#include <fstream>
#include <set>
#include <sstream>

namespace rdaudit {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw config_error("config: " + what); }

template <typename T>
T get_req(const json& js, const std::string& key, const std::string& where) {
  if (!js.contains(key)) bad(where + ": missing '" + key + "'");
  try {
    return js.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_opt(const json& js, const std::string& key, T def) {
  if (!js.contains(key)) return def;
  return js.at(key).get<T>();
}

std::vector<double> species_vector(const json& js, const std::string& key, int m,
                                   const std::string& where) {
  auto v = get_req<std::vector<double>>(js, key, where);
  if (static_cast<int>(v.size()) == 1 && m > 1) v.assign(m, v[0]);
  if (static_cast<int>(v.size()) != m)
    bad(where + "." + key + ": expected " + std::to_string(m) + " entries");
  return v;
}

ReactionSpec parse_reaction(const json& js) {
  const std::string kind = get_req<std::string>(js, "kind", "system");
  if (kind == "s_alpha_beta_gamma") {
    return ReactionSpec::s_alpha_beta_gamma(get_req<double>(js, "alpha", "system"),
                                            get_req<double>(js, "beta", "system"),
                                            get_req<double>(js, "gamma", "system"));
  }
  if (kind == "s_alpha_beta_gamma_delta") {
    return ReactionSpec::s_alpha_beta_gamma_delta(get_req<double>(js, "alpha", "system"),
                                                  get_req<double>(js, "beta", "system"),
                                                  get_req<double>(js, "gamma", "system"),
                                                  get_req<double>(js, "delta", "system"));
  }
  if (kind == "lotka_volterra") {
    auto e = get_req<std::vector<double>>(js, "e", "system");
    auto rows = get_req<std::vector<std::vector<double>>>(js, "A", "system");
    const int m = static_cast<int>(e.size());
    Eigen::MatrixXd A(m, m);
    if (static_cast<int>(rows.size()) != m) bad("system.A: need m rows");
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(rows[i].size()) != m) bad("system.A: need m columns");
      for (int j = 0; j < m; ++j) A(i, j) = rows[i][j];
    }
    return ReactionSpec::lotka_volterra(Eigen::Map<Eigen::VectorXd>(e.data(), m), A);
  }
  if (kind == "custom") {
    auto terms_js = get_req<json>(js, "terms", "system");
    if (!terms_js.is_array() || terms_js.empty()) bad("system.terms: need one list per species");
    const int m = static_cast<int>(terms_js.size());
    std::vector<std::vector<PolyTerm>> terms(m);
    for (int i = 0; i < m; ++i) {
      for (const json& t : terms_js[i]) {
        PolyTerm term;
        term.coef = get_req<double>(t, "coef", "system.terms");
        auto p = get_req<std::vector<double>>(t, "powers", "system.terms");
        if (static_cast<int>(p.size()) != m) bad("system.terms powers: need m entries");
        term.powers = Eigen::Map<Eigen::VectorXd>(p.data(), m);
        terms[i].push_back(std::move(term));
      }
    }
    auto a = get_req<std::vector<double>>(js, "a", "system");
    if (static_cast<int>(a.size()) != m) bad("system.a: need m entries");

    MassClassSpec mass;
    const json& mc = js.contains("mass_class") ? js.at("mass_class") : json::object();
    const std::string mk = get_opt<std::string>(mc, "kind", "M");
    if (mk == "M") {
      mass.kind = MassClass::M;
    } else if (mk == "Mprime") {
      mass.kind = MassClass::MPrime;
      mass.c0 = get_req<double>(mc, "c0", "system.mass_class");
      if (!(mass.c0 >= 0.0)) bad("system.mass_class.c0 must be >= 0");
    } else {
      bad("system.mass_class.kind must be M or Mprime");
    }

    GrowthSpec growth;
    if (js.contains("growth_class")) {
      const json& gc = js.at("growth_class");
      const std::string gk = get_req<std::string>(gc, "kind", "system.growth_class");
      if (gk == "QG") {
        growth.kind = GrowthClass::QG;
        growth.c = get_req<double>(gc, "c", "system.growth_class");
      } else if (gk == "SQG") {
        growth.kind = GrowthClass::SQG;
        growth.c = get_req<double>(gc, "c", "system.growth_class");
        growth.eps = get_req<double>(gc, "eps", "system.growth_class");
        if (!(growth.eps > 0.0 && growth.eps < 1.0))
          bad("system.growth_class.eps must lie in (0,1)");
      } else if (gk != "none") {
        bad("system.growth_class.kind must be QG, SQG or none");
      }
    }
    return ReactionSpec::custom(m, std::move(terms),
                                Eigen::Map<Eigen::VectorXd>(a.data(), m), mass, growth);
  }
  bad("system.kind '" + kind + "' unknown");
}

const std::set<std::string>& known_audits() {
  static const std::set<std::string> names = {
      "mass",       "conservation", "key_estimate",          "pierre_l2",
      "no_sign",    "reaction_l1",  "reaction_l1_stability", "porous",
      "porous_stability", "gronwall"};
  return names;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& js) {
  ExperimentConfig cfg;
  try {
    if (!js.contains("system")) bad("missing 'system'");
    ReactionSpec reaction = parse_reaction(js.at("system"));
    const int m = reaction.species();

    std::vector<double> d = species_vector(js, "d", m, "config");
    std::vector<double> mexp(m, 1.0);
    if (js.contains("mexp")) mexp = species_vector(js, "mexp", m, "config");
    cfg.system = make_system(std::move(reaction), d, mexp);

    const json& gj = js.contains("grid") ? js.at("grid") : json::object();
    const int dim = get_opt<int>(gj, "dim", 1);
    auto lengths = get_opt<std::vector<double>>(gj, "lengths", std::vector<double>(dim, 1.0));
    auto cells = get_opt<std::vector<int>>(gj, "cells", std::vector<int>(dim, 128));
    std::string bc_name = get_opt<std::string>(gj, "bc",
                                               cfg.system.porous() ? "dirichlet" : "neumann");
    Bc bc;
    if (bc_name == "neumann") bc = Bc::Neumann;
    else if (bc_name == "dirichlet") bc = Bc::Dirichlet;
    else bad("grid.bc must be neumann or dirichlet");
    try {
      cfg.grid = make_grid(dim, lengths, cells, bc);
    } catch (const std::invalid_argument& e) {
      bad(std::string("grid: ") + e.what());
    }
    if (cfg.system.porous() && bc != Bc::Dirichlet)
      bad("porous systems (any mexp > 1) require dirichlet boundary conditions");

    // initial data
    const json& ij = js.contains("init") ? js.at("init") : json::object();
    const std::string ik = get_opt<std::string>(ij, "kind", "constant");
    InitSpec& init = cfg.init;
    if (ik == "constant") {
      init.kind = InitSpec::Kind::Constant;
      init.values = ij.contains("values") ? species_vector(ij, "values", m, "init")
                                          : std::vector<double>(m, 1.0);
      for (double v : init.values)
        if (v < 0.0) bad("init.values must be nonnegative");
    } else if (ik == "cosine_mix") {
      init.kind = InitSpec::Kind::CosineMix;
      init.base = species_vector(ij, "base", m, "init");
      init.amplitude = species_vector(ij, "amplitude", m, "init");
      auto mode = get_opt<std::vector<int>>(ij, "mode", std::vector<int>(m, 1));
      if (static_cast<int>(mode.size()) == 1 && m > 1) mode.assign(m, mode[0]);
      if (static_cast<int>(mode.size()) != m) bad("init.mode: need m entries");
      init.mode = mode;
      for (int i = 0; i < m; ++i)
        if (init.base[i] < std::abs(init.amplitude[i]))
          bad("init cosine_mix: base must dominate |amplitude| (nonnegativity)");
    } else if (ik == "random_uniform") {
      init.kind = InitSpec::Kind::RandomUniform;
      if (!ij.contains("seed")) bad("init.seed is mandatory for random initial data");
      init.seed = ij.at("seed").get<std::uint64_t>();
      init.max_value = species_vector(ij, "max", m, "init");
      for (double v : init.max_value)
        if (!(v >= 0.0)) bad("init.max must be nonnegative");
    } else if (ik == "bump") {
      init.kind = InitSpec::Kind::Bump;
      init.center = ij.contains("center") ? species_vector(ij, "center", m, "init")
                                          : std::vector<double>(m, 0.5);
      init.width = ij.contains("width") ? species_vector(ij, "width", m, "init")
                                        : std::vector<double>(m, 0.25);
      init.mass = ij.contains("mass") ? species_vector(ij, "mass", m, "init")
                                      : std::vector<double>(m, 1.0);
    } else if (ik == "from_file") {
      init.kind = InitSpec::Kind::FromFile;
      init.path = get_req<std::string>(ij, "path", "init");
    } else {
      bad("init.kind '" + ik + "' unknown");
    }

    const json& tj = js.contains("truncation") ? js.at("truncation") : json::object();
    cfg.n_trunc = get_opt<double>(tj, "n", 100.0);
    if (!(cfg.n_trunc > 0.0)) bad("truncation.n must be positive");

    const json& timej = js.contains("time") ? js.at("time") : json::object();
    cfg.controls.T = get_req<double>(timej, "T", "time");
    if (!(cfg.controls.T >= 0.0)) bad("time.T must be >= 0");
    if (timej.contains("dt")) {
      cfg.controls.dt = timej.at("dt").get<double>();
      if (!(*cfg.controls.dt > 0.0)) bad("time.dt must be positive");
    } else if (!cfg.system.porous() && cfg.controls.T > 0.0) {
      bad("time.dt is required for semilinear systems");
    }
    cfg.controls.cfl = get_opt<double>(timej, "cfl", 0.9);
    if (!(cfg.controls.cfl > 0.0 && cfg.controls.cfl <= 1.0)) bad("time.cfl must be in (0,1]");
    cfg.controls.blowup_threshold = get_opt<double>(timej, "blowup_threshold", 1e8);
    cfg.controls.max_steps = get_opt<long>(timej, "max_steps", 20'000'000L);
    if (timej.contains("clip_tolerance"))
      cfg.controls.clip_tolerance = timej.at("clip_tolerance").get<double>();

    const json& oj = js.contains("output") ? js.at("output") : json::object();
    cfg.output.csv = get_opt<std::string>(oj, "csv", "diagnostics.csv");
    cfg.output.report = get_opt<std::string>(oj, "report", "report.txt");
    cfg.output.snapshots = get_opt<std::string>(oj, "snapshots", "");
    cfg.output.snapshot_stride = get_opt<int>(oj, "snapshot_stride", 10);
    if (cfg.output.snapshot_stride < 1) bad("output.snapshot_stride must be >= 1");
    cfg.controls.snapshot_stride = cfg.output.snapshot_stride;

    cfg.audits = get_opt<std::vector<std::string>>(js, "audits",
                                                   {"mass", "conservation"});
    for (const std::string& a : cfg.audits)
      if (!known_audits().count(a)) bad("unknown audit '" + a + "'");
  } catch (const json::exception& e) {
    bad(e.what());
  }

  // normalized echo: every effective default made explicit
  json echo = js;
  echo["d"] = std::vector<double>(cfg.system.d.data(), cfg.system.d.data() + cfg.system.species());
  echo["mexp"] =
      std::vector<double>(cfg.system.mexp.data(), cfg.system.mexp.data() + cfg.system.species());
  echo["grid"] = {{"dim", cfg.grid.dim()},
                  {"lengths", [&] {
                     std::vector<double> v;
                     for (int a = 0; a < cfg.grid.dim(); ++a) v.push_back(cfg.grid.length(a));
                     return v;
                   }()},
                  {"cells", [&] {
                     std::vector<int> v;
                     for (int a = 0; a < cfg.grid.dim(); ++a) v.push_back(cfg.grid.cells(a));
                     return v;
                   }()},
                  {"bc", to_string(cfg.grid.bc())}};
  echo["truncation"] = {{"n", cfg.n_trunc}};
  json timee = {{"T", cfg.controls.T},
                {"cfl", cfg.controls.cfl},
                {"blowup_threshold", cfg.controls.blowup_threshold},
                {"max_steps", cfg.controls.max_steps}};
  if (cfg.controls.dt) timee["dt"] = *cfg.controls.dt;
  if (cfg.controls.clip_tolerance) timee["clip_tolerance"] = *cfg.controls.clip_tolerance;
  echo["time"] = timee;
  echo["audits"] = cfg.audits;
  echo["output"] = {{"csv", cfg.output.csv},
                    {"report", cfg.output.report},
                    {"snapshots", cfg.output.snapshots},
                    {"snapshot_stride", cfg.output.snapshot_stride}};
  cfg.echo = std::move(echo);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  nlohmann::json js;
  try {
    in >> js;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(js);
}

State build_initial_state(const ExperimentConfig& cfg) {
  const Grid& g = cfg.grid;
  const int m = cfg.system.species();
  std::vector<Field> fields;
  fields.reserve(m);
  switch (cfg.init.kind) {
    case InitSpec::Kind::Constant:
      for (int i = 0; i < m; ++i) fields.push_back(Field::constant(g, cfg.init.values[i]));
      break;
    case InitSpec::Kind::CosineMix:
      for (int i = 0; i < m; ++i)
        fields.push_back(cosine_mix(g, cfg.init.base[i], cfg.init.amplitude[i],
                                    cfg.init.mode[i]));
      break;
    case InitSpec::Kind::RandomUniform:
      for (int i = 0; i < m; ++i)
        fields.push_back(random_uniform(g, cfg.init.seed + 0x9e3779b9ull * (i + 1),
                                        cfg.init.max_value[i]));
      break;
    case InitSpec::Kind::Bump:
      for (int i = 0; i < m; ++i)
        fields.push_back(bump(g, cfg.init.center[i], cfg.init.width[i], cfg.init.mass[i]));
      break;
    case InitSpec::Kind::FromFile: {
      std::ifstream in(cfg.init.path);
      if (!in) throw config_error("init.from_file: cannot open '" + cfg.init.path + "'");
      for (int i = 0; i < m; ++i) {
        Eigen::ArrayXd v(g.cell_count());
        for (int c = 0; c < g.cell_count(); ++c)
          if (!(in >> v[c]))
            throw config_error("init.from_file: expected " +
                               std::to_string(m * g.cell_count()) + " values");
        if ((v < 0.0).any()) throw config_error("init.from_file: negative value");
        fields.emplace_back(g, std::move(v));
      }
      break;
    }
  }
  return make_state(0.0, std::move(fields));
}

void write_snapshot_series(const std::string& path, const Grid& g,
                           const std::vector<State>& snapshots) {
  std::ofstream out(path);
  if (!out) throw config_error("snapshots: cannot write '" + path + "'");
  const int m = snapshots.empty() ? 0 : static_cast<int>(snapshots.front().species.size());
  out << "rdaudit-snapshots 1 m=" << m << " dim=" << g.dim() << " cells="
      << g.cells(0);
  if (g.dim() == 2) out << "x" << g.cells(1);
  out << "\n";
  char buf[32];
  for (const State& s : snapshots) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.t);
    out << "t " << buf << "\n";
    for (const Field& f : s.species) {
      for (int c = 0; c < g.cell_count(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", f.values()[c]);
        out << buf << (c + 1 == g.cell_count() ? "" : " ");
      }
      out << "\n";
    }
  }
}

std::vector<State> read_snapshot_series(const std::string& path, const Grid& g) {
  std::ifstream in(path);
  if (!in) throw config_error("snapshots: cannot open '" + path + "'");
  std::string header;
  std::getline(in, header);
  if (header.rfind("rdaudit-snapshots 1", 0) != 0)
    throw config_error("snapshots: unrecognized header in '" + path + "'");
  std::vector<State> out;
  std::string tag;
  while (in >> tag) {
    if (tag != "t") throw config_error("snapshots: malformed series");
    double t;
    in >> t;
    std::vector<Field> fields;
    // species count is recovered from the header line
    const std::size_t mpos = header.find("m=");
    const int m = std::stoi(header.substr(mpos + 2));
    for (int i = 0; i < m; ++i) {
      Eigen::ArrayXd v(g.cell_count());
      for (int c = 0; c < g.cell_count(); ++c)
        if (!(in >> v[c])) throw config_error("snapshots: truncated series");
      fields.emplace_back(g, std::move(v));
    }
    out.push_back(make_state(t, std::move(fields)));
  }
  return out;
}

}  // namespace rdaudit
