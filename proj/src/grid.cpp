#include "rdaudit/grid.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace rdaudit {

std::string to_string(Bc bc) { return bc == Bc::Neumann ? "neumann" : "dirichlet"; }

Grid make_grid(int dim, const std::vector<double>& lengths, const std::vector<int>& cells,
               Bc bc) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("make_grid: dim must be 1 or 2, got " + std::to_string(dim));
  if (static_cast<int>(lengths.size()) != dim || static_cast<int>(cells.size()) != dim)
    throw std::invalid_argument("make_grid: lengths/cells size must match dim");

  Grid g;
  g.dim_ = dim;
  g.bc_ = bc;
  g.cell_volume_ = 1.0;
  g.measure_ = 1.0;
  g.cell_count_ = 1;
  for (int a = 0; a < dim; ++a) {
    if (!(lengths[a] > 0.0))
      throw std::invalid_argument("make_grid: lengths must be positive");
    if (cells[a] < 4)
      throw std::invalid_argument("make_grid: need at least 4 cells per axis");
    g.lengths_[a] = lengths[a];
    g.cells_[a] = cells[a];
    g.h_[a] = lengths[a] / cells[a];
    g.cell_volume_ *= g.h_[a];
    g.measure_ *= lengths[a];
    g.cell_count_ *= cells[a];
  }
  return g;
}

Grid with_bc(const Grid& g, Bc bc) {
  std::vector<double> lengths(g.dim());
  std::vector<int> cells(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    lengths[a] = g.length(a);
    cells[a] = g.cells(a);
  }
  return make_grid(g.dim(), lengths, cells, bc);
}

Field::Field(Grid grid, Eigen::ArrayXd values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count())
    throw std::invalid_argument("Field: value count does not match grid cell count");
  if (!values_.allFinite()) throw std::invalid_argument("Field: non-finite value");
}

Field Field::constant(const Grid& g, double value) {
  return Field(g, Eigen::ArrayXd::Constant(g.cell_count(), value));
}

Field Field::from_function(const Grid& g, const std::function<double(double, double)>& f) {
  Eigen::ArrayXd v(g.cell_count());
  if (g.dim() == 1) {
    for (int i = 0; i < g.cells(0); ++i) v[i] = f(g.center(0, i), 0.0);
  } else {
    for (int iy = 0; iy < g.cells(1); ++iy)
      for (int ix = 0; ix < g.cells(0); ++ix)
        v[g.index(ix, iy)] = f(g.center(0, ix), g.center(1, iy));
  }
  return Field(g, std::move(v));
}

double integrate(const Field& f) { return f.values().sum() * f.grid().cell_volume(); }

double mean(const Field& f) { return integrate(f) / f.grid().measure(); }

double lp_norm(const Field& f, double p) {
  if (std::isinf(p)) return f.values().abs().maxCoeff();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
  const double vol = f.grid().cell_volume();
  if (p == 1.0) return f.values().abs().sum() * vol;
  if (p == 2.0) return std::sqrt(f.values().square().sum() * vol);
  return std::pow(f.values().abs().pow(p).sum() * vol, 1.0 / p);
}

Field cosine_mix(const Grid& g, double base, double amplitude, int mode) {
  const double pi = std::acos(-1.0);
  return Field::from_function(g, [&](double x, double y) {
    double v = std::cos(mode * pi * x / g.length(0));
    if (g.dim() == 2) v *= std::cos(mode * pi * y / g.length(1));
    return base + amplitude * v;
  });
}

Field random_uniform(const Grid& g, std::uint64_t seed, double max_value) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, max_value);
  Eigen::ArrayXd v(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i) v[i] = dist(rng);
  return Field(g, std::move(v));
}

Field bump(const Grid& g, double center, double width, double mass) {
  if (!(width > 0.0)) throw std::invalid_argument("bump: width must be positive");
  auto profile = [&](double x, double L) {
    const double s = (x - center * L) / width;
    const double q = 1.0 - s * s;
    return q > 0.0 ? q * q : 0.0;
  };
  Field f = Field::from_function(g, [&](double x, double y) {
    double v = profile(x, g.length(0));
    if (g.dim() == 2) v *= profile(y, g.length(1));
    return v;
  });
  const double total = integrate(f);
  if (!(total > 0.0)) throw std::invalid_argument("bump: support does not intersect the grid");
  return Field(g, f.values() * (mass / total));
}

State make_state(double t, std::vector<Field> species) {
  if (species.empty()) throw std::invalid_argument("make_state: no species");
  for (const Field& f : species)
    if (!(f.grid() == species.front().grid()))
      throw std::invalid_argument("make_state: species on different grids");
  State s;
  s.t = t;
  s.species = std::move(species);
  return s;
}

const Grid& state_grid(const State& s) {
  if (s.species.empty()) throw std::invalid_argument("state_grid: empty state");
  return s.species.front().grid();
}

}  // namespace rdaudit
