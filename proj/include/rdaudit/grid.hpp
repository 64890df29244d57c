#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rdaudit/errors.hpp"

namespace rdaudit {

enum class Bc { Neumann, Dirichlet };

std::string to_string(Bc bc);

/// Uniform cell-centered mesh on an axis-aligned box, 1D or 2D.
/// Value type: cheap to copy, immutable after construction.
class Grid {
 public:
  Grid() = default;

  int dim() const { return dim_; }
  Bc bc() const { return bc_; }
  double length(int axis) const { return lengths_[axis]; }
  int cells(int axis) const { return cells_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double cell_volume() const { return cell_volume_; }
  double measure() const { return measure_; }  // |Omega|
  int cell_count() const { return cell_count_; }

  /// Coordinate of the cell center along one axis.
  double center(int axis, int i) const { return (i + 0.5) * h_[axis]; }
  /// Linear cell index, x fastest.
  int index(int ix, int iy = 0) const { return ix + cells_[0] * iy; }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && lengths_ == o.lengths_ && cells_ == o.cells_ && bc_ == o.bc_;
  }
  bool same_mesh(const Grid& o) const {
    return dim_ == o.dim_ && lengths_ == o.lengths_ && cells_ == o.cells_;
  }

  friend Grid make_grid(int dim, const std::vector<double>& lengths,
                        const std::vector<int>& cells, Bc bc);

 private:
  int dim_ = 0;
  std::array<double, 2> lengths_{0.0, 0.0};
  std::array<int, 2> cells_{0, 0};
  std::array<double, 2> h_{0.0, 0.0};
  Bc bc_ = Bc::Neumann;
  double cell_volume_ = 0.0;
  double measure_ = 0.0;
  int cell_count_ = 0;
};

/// Build a grid. Rejects dim outside {1,2}, fewer than 4 cells per axis and
/// nonpositive lengths.
Grid make_grid(int dim, const std::vector<double>& lengths, const std::vector<int>& cells,
               Bc bc);

/// Same mesh with the other boundary-condition tag.
Grid with_bc(const Grid& g, Bc bc);

/// One cell-averaged scalar per grid cell.
class Field {
 public:
  Field() = default;
  /// Validates the value count and that every entry is finite.
  Field(Grid grid, Eigen::ArrayXd values);

  static Field constant(const Grid& g, double value);
  /// Evaluates f at cell centers; in 1D the second argument is 0.
  static Field from_function(const Grid& g, const std::function<double(double, double)>& f);

  const Grid& grid() const { return grid_; }
  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::ArrayXd& values() { return values_; }

 private:
  Grid grid_;
  Eigen::ArrayXd values_;
};

/// Cell-quadrature integral: sum of values times cell volume. Linear in f.
double integrate(const Field& f);

/// integrate(f) / |Omega|.
double mean(const Field& f);

/// Cell-quadrature L^p norm; p = infinity gives max |values|. Rejects p < 1.
double lp_norm(const Field& f, double p);

// --- initial-data generators (cell-center evaluation) ---

/// base + amplitude * prod_axes cos(mode * pi * x_a / L_a)
Field cosine_mix(const Grid& g, double base, double amplitude, int mode);

/// Deterministic uniform values in [0, max_value), seeded.
Field random_uniform(const Grid& g, std::uint64_t seed, double max_value);

/// Compactly supported quartic bump (1 - s^2)^2 centered at `center` (same
/// center fraction along each axis) with half-width `width`, scaled so the
/// discrete integral equals `mass`.
Field bump(const Grid& g, double center, double width, double mass);

/// Species stack at one time; all fields share one grid.
struct State {
  double t = 0.0;
  std::vector<Field> species;
};

/// Validates that all species share one grid.
State make_state(double t, std::vector<Field> species);

const Grid& state_grid(const State& s);

}  // namespace rdaudit
