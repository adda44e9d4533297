#pragma once

#include "fembench/sparse.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fembench {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct SolverReport {
  int iterations = 0;
  std::vector<double> residuals;  // relative residual norms, starting with 1
  double seconds = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients starting from the given x. Stops when
/// |b - Ax| <= rel_tol |b|. Throws std::runtime_error on p^T A p <= 0.
SolverReport pcg(const LinearOperator& a, const LinearOperator& precondition, std::span<const double> b,
                 std::span<double> x, double rel_tol, int max_iter);

constexpr unsigned eigen_seed = 0x5eed;

struct EigenEstimate {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme Ritz values of D^-1 A from the Lanczos coefficients of
/// Jacobi-preconditioned CG with a seeded random start vector.
EigenEstimate estimate_eigenvalues(const LinearOperator& a, std::span<const double> diagonal, int iterations = 15,
                                   unsigned seed = eigen_seed);
double estimate_max_eigenvalue(const LinearOperator& a, std::span<const double> diagonal, int iterations = 15,
                               unsigned seed = eigen_seed);

struct ChebyshevConfig {
  int degree = 5;
  double lower = 0.06;
  double upper = 1.2;
  int eig_iterations = 15;
};

/// Smallest degree whose Chebyshev bound 2 rho^p / (1 + rho^2p) on
/// [lambda_min, lambda_max] is below the target.
int chebyshev_degree_for(double lambda_min, double lambda_max, double target);

class Smoother {
 public:
  virtual ~Smoother() = default;
  /// Improves x for A x = b; with zero_start the input x is ignored.
  virtual void smooth(std::span<const double> b, std::span<double> x, bool zero_start) const = 0;
};

/// Chebyshev iteration in the Jacobi-preconditioned operator on
/// [lower * lambda_max, upper * lambda_max].
class ChebyshevSmoother : public Smoother {
 public:
  ChebyshevSmoother(LinearOperator a, std::vector<double> diagonal, const ChebyshevConfig& config = {});
  /// Explicit interval and degree (coarse-level use).
  ChebyshevSmoother(LinearOperator a, std::vector<double> diagonal, double lambda_min, double lambda_max, int degree);

  void smooth(std::span<const double> b, std::span<double> x, bool zero_start) const override;
  double lambda_max_estimate() const { return lambda_max_; }
  double range_min() const { return lo_; }
  double range_max() const { return hi_; }
  int degree() const { return degree_; }

 private:
  LinearOperator a_;
  std::vector<double> inv_diag_;
  double lambda_max_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  int degree_ = 5;
};

/// x += (LU)^-1 (b - A x) with the ILU(0) factors of an assembled matrix.
class ILUSmoother : public Smoother {
 public:
  ILUSmoother(std::shared_ptr<const SparseMatrix> a, int sweeps = 1);
  void smooth(std::span<const double> b, std::span<double> x, bool zero_start) const override;

 private:
  std::shared_ptr<const SparseMatrix> a_;
  ILU0 ilu_;
  int sweeps_;
};

/// One level of a multigrid hierarchy. `prolongation` maps the next coarser
/// level to this one; unused on the coarsest level.
struct MGLevel {
  int size = 0;
  LinearOperator apply;
  std::unique_ptr<Smoother> smoother;
  SparseMatrix prolongation;
  SparseMatrix restriction;
};

/// V-cycle preconditioner. Level 0 is the coarsest and is solved with the
/// coarse solver; levels above get one pre- and one post-smoothing step.
class Multigrid {
 public:
  Multigrid() = default;
  Multigrid(std::vector<MGLevel> levels, LinearOperator coarse_solve);

  int n_levels() const { return static_cast<int>(levels_.size()); }
  const MGLevel& level(int l) const { return levels_[l]; }
  void vcycle(std::span<const double> b, std::span<double> x) const;
  LinearOperator as_preconditioner() const;

 private:
  void cycle(int l, std::span<const double> b, std::span<double> x) const;

  std::vector<MGLevel> levels_;
  LinearOperator coarse_;
  mutable std::vector<std::vector<double>> r_, bc_, xc_;
};

}  // namespace fembench
