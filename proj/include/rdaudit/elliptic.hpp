#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>

#include "rdaudit/grid.hpp"

namespace rdaudit {

/// Sparse -Delta_h: 3-point / 5-point flux stencil. Neumann uses mirror ghost
/// cells (zero boundary flux, every row sums to zero); Dirichlet pins a zero
/// value on boundary faces (one-sided half-cell flux), giving an SPD matrix.
Eigen::SparseMatrix<double> neg_laplacian_matrix(const Grid& g, Bc bc);

/// Face-difference quadrature of the Dirichlet energy  sum_faces |grad w|^2 dV.
/// Interior faces carry the full cell volume, Dirichlet boundary faces carry a
/// one-sided half-cell gradient with half the volume, Neumann boundary faces
/// contribute nothing. Chosen so that grad_energy(w) == <(-Delta_h w), w>_h
/// exactly (summation by parts).
double grad_energy(const Field& w, Bc bc);

/// Same face set and weights with |grad w|^beta instead of the square.
double grad_lbeta(const Field& w, Bc bc, double beta);

/// Solves -Delta_h W = rhs for the grid's boundary condition.
/// Neumann: the right-hand side is mean-centered internally and the solution
/// mean is pinned to zero through a Lagrange-multiplier row, so no cell is
/// singled out. Dirichlet: direct SPD factorization.
/// Throws numerical_error when the factorization fails or the relative
/// residual exceeds 1e-10.
class PoissonSolver {
 public:
  explicit PoissonSolver(Grid grid);

  Field solve(const Field& rhs) const;
  /// Raw-array variant (values on the grid's cells).
  Eigen::ArrayXd solve(const Eigen::ArrayXd& rhs) const;

  const Grid& grid() const { return grid_; }
  Bc bc() const { return grid_.bc(); }
  const Eigen::SparseMatrix<double>& op() const { return op_; }

 private:
  Grid grid_;
  Eigen::SparseMatrix<double> op_;  // N x N, -Delta_h
  // Dirichlet path
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  // Neumann path: LU of the [op v; v^T 0] saddle system enforcing zero mean
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// ||f||_{H^-1}: solve the Poisson problem and return ||grad W||_{L^2} by
/// face-difference quadrature. Mean-centered on Neumann grids (invariant
/// under f -> f + const), plain Dirichlet solve otherwise.
double hminus1_norm(const PoissonSolver& solver, const Field& f);

/// Grid-only constants used by the audits.
struct DomainConstants {
  /// |Omega| * max(0, max_{x,y} -G_h(x,y)) over the discrete Neumann Green
  /// function; for any g <= kappa with <g> = 0 the mean-zero solution z of
  /// -Delta_h z = g satisfies max z <= c_omega * kappa.
  double c_omega = 0.0;
  /// Sharp discrete L1 -> L2 constant max_y ||G_h(.,y)||_{L2} (diagnostic).
  double c_l1l2 = 0.0;
  /// max theta with -Delta_h theta = 1, theta = 0 on the boundary.
  double theta_inf = 0.0;
  Field theta;
};

/// One Neumann solve per cell (cached factorization) plus the Dirichlet theta
/// solve. Works on the mesh geometry; the grid's own bc tag is ignored.
DomainConstants domain_constants(const Grid& g);

/// Backward-Euler diffusion operator (I + dt*d*(-Delta_h)), SPD, factored once.
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(const Grid& g, Bc bc, double d, double dt);

  /// Solves (I + dt*d*(-Delta_h)) u = v.
  Eigen::ArrayXd solve(const Eigen::ArrayXd& v) const;
  bool identity() const { return identity_; }

 private:
  bool identity_ = false;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

}  // namespace rdaudit
