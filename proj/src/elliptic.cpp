#include "rdaudit/elliptic.hpp"

#include <cmath>
#include <vector>

namespace rdaudit {

namespace {

// Applies fn(left_index, right_index, axis) to every interior face and
// fn(cell_index, -1, axis) to every boundary face (right = -1 marks boundary).
template <typename Fn>
void for_each_face(const Grid& g, Fn&& fn) {
  const int nx = g.cells(0);
  if (g.dim() == 1) {
    for (int i = 0; i + 1 < nx; ++i) fn(i, i + 1, 0);
    fn(0, -1, 0);
    fn(nx - 1, -1, 0);
    return;
  }
  const int ny = g.cells(1);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) fn(g.index(ix, iy), g.index(ix + 1, iy), 0);
    fn(g.index(0, iy), -1, 0);
    fn(g.index(nx - 1, iy), -1, 0);
  }
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy + 1 < ny; ++iy) fn(g.index(ix, iy), g.index(ix, iy + 1), 1);
    fn(g.index(ix, 0), -1, 1);
    fn(g.index(ix, ny - 1), -1, 1);
  }
}

}  // namespace

Eigen::SparseMatrix<double> neg_laplacian_matrix(const Grid& g, Bc bc) {
  const int n = g.cell_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (g.dim() == 1 ? 3 : 5));
  for_each_face(g, [&](int left, int right, int axis) {
    const double w = 1.0 / (g.h(axis) * g.h(axis));
    if (right >= 0) {
      trip.emplace_back(left, left, w);
      trip.emplace_back(right, right, w);
      trip.emplace_back(left, right, -w);
      trip.emplace_back(right, left, -w);
    } else if (bc == Bc::Dirichlet) {
      // flux (u - 0)/(h/2) through the boundary face
      trip.emplace_back(left, left, 2.0 * w);
    }
  });
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

double grad_energy(const Field& w, Bc bc) { return grad_lbeta(w, bc, 2.0); }

double grad_lbeta(const Field& w, Bc bc, double beta) {
  const Grid& g = w.grid();
  const Eigen::ArrayXd& v = w.values();
  const double vol = g.cell_volume();
  double acc = 0.0;
  for_each_face(g, [&](int left, int right, int axis) {
    if (right >= 0) {
      const double grad = (v[right] - v[left]) / g.h(axis);
      acc += std::pow(std::abs(grad), beta) * vol;
    } else if (bc == Bc::Dirichlet) {
      const double grad = v[left] / (0.5 * g.h(axis));
      acc += std::pow(std::abs(grad), beta) * (0.5 * vol);
    }
  });
  return acc;
}

PoissonSolver::PoissonSolver(Grid grid) : grid_(grid) {
  op_ = neg_laplacian_matrix(grid_, grid_.bc());
  const int n = grid_.cell_count();
  if (grid_.bc() == Bc::Dirichlet) {
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    ldlt_->compute(op_);
    if (ldlt_->info() != Eigen::Success)
      throw numerical_error("PoissonSolver: Dirichlet factorization failed");
    return;
  }
  // Singular Neumann operator: augment with the zero-mean constraint.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op_.nonZeros()) + 2 * n);
  for (int k = 0; k < op_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op_, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  const double vol = grid_.cell_volume();
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, n, vol);
    trip.emplace_back(n, i, vol);
  }
  Eigen::SparseMatrix<double> aug(n + 1, n + 1);
  aug.setFromTriplets(trip.begin(), trip.end());
  lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(aug);
  if (lu_->info() != Eigen::Success)
    throw numerical_error("PoissonSolver: Neumann factorization failed");
}

Eigen::ArrayXd PoissonSolver::solve(const Eigen::ArrayXd& rhs) const {
  const int n = grid_.cell_count();
  if (rhs.size() != n) throw std::invalid_argument("PoissonSolver::solve: size mismatch");
  Eigen::VectorXd b = rhs.matrix();
  const double rhs_scale = b.norm();
  Eigen::VectorXd w;
  if (grid_.bc() == Bc::Dirichlet) {
    w = ldlt_->solve(b);
    if (ldlt_->info() != Eigen::Success)
      throw numerical_error("PoissonSolver: Dirichlet solve failed");
  } else {
    b.array() -= b.sum() / n;  // compatibility enforced, not assumed
    Eigen::VectorXd baug(n + 1);
    baug.head(n) = b;
    baug[n] = 0.0;
    Eigen::VectorXd waug = lu_->solve(baug);
    if (lu_->info() != Eigen::Success)
      throw numerical_error("PoissonSolver: Neumann solve failed");
    w = waug.head(n);
  }
  // centering a (near-)constant rhs leaves pure rounding noise; scale the
  // residual check by the uncentered input as well
  const double scale = std::max(b.norm(), 1e-13 * std::max(1.0, rhs_scale));
  const double res = (op_ * w - b).norm();
  if (res > 1e-10 * scale)
    throw numerical_error("PoissonSolver: residual too large", res / scale);
  return w.array();
}

Field PoissonSolver::solve(const Field& rhs) const {
  if (!rhs.grid().same_mesh(grid_))
    throw std::invalid_argument("PoissonSolver::solve: field on a different mesh");
  return Field(grid_, solve(rhs.values()));
}

double hminus1_norm(const PoissonSolver& solver, const Field& f) {
  Field w = solver.solve(f);  // Neumann path centers the rhs internally
  return std::sqrt(grad_energy(w, solver.bc()));
}

DomainConstants domain_constants(const Grid& g) {
  DomainConstants dc;
  PoissonSolver dirichlet(with_bc(g, Bc::Dirichlet));
  dc.theta = dirichlet.solve(Field::constant(dirichlet.grid(), 1.0));
  dc.theta_inf = dc.theta.values().maxCoeff();

  PoissonSolver neumann(with_bc(g, Bc::Neumann));
  const int n = g.cell_count();
  const double vol = g.cell_volume();
  double max_neg = 0.0;
  double max_col_l2 = 0.0;
  Eigen::ArrayXd rhs(n);
  for (int y = 0; y < n; ++y) {
    rhs.setConstant(-1.0 / g.measure());
    rhs[y] += 1.0 / vol;
    Eigen::ArrayXd col = neumann.solve(rhs);
    max_neg = std::max(max_neg, -col.minCoeff());
    max_col_l2 = std::max(max_col_l2, std::sqrt(col.square().sum() * vol));
  }
  dc.c_omega = g.measure() * std::max(0.0, max_neg);
  dc.c_l1l2 = max_col_l2;
  return dc;
}

ImplicitDiffusion::ImplicitDiffusion(const Grid& g, Bc bc, double d, double dt) {
  const double c = d * dt;
  if (c == 0.0) {
    identity_ = true;
    return;
  }
  Eigen::SparseMatrix<double> m = neg_laplacian_matrix(g, bc);
  m *= c;
  Eigen::SparseMatrix<double> eye(g.cell_count(), g.cell_count());
  eye.setIdentity();
  m += eye;
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(m);
  if (ldlt_->info() != Eigen::Success)
    throw numerical_error("ImplicitDiffusion: factorization failed");
}

Eigen::ArrayXd ImplicitDiffusion::solve(const Eigen::ArrayXd& v) const {
  if (identity_) return v;
  Eigen::VectorXd u = ldlt_->solve(v.matrix());
  if (ldlt_->info() != Eigen::Success)
    throw numerical_error("ImplicitDiffusion: solve failed");
  return u.array();
}

}  // namespace rdaudit
