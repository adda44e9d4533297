#include "fembench/solvers.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace fembench {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SolverReport pcg(const LinearOperator& a, const LinearOperator& precondition, std::span<const double> b,
                 std::span<double> x, double rel_tol, int max_iter) {
  if (b.size() != x.size()) throw std::invalid_argument("pcg: size mismatch");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolverReport report;
  std::vector<double> r(n), z(n), p(n), ap(n);
  a(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double b_norm = std::sqrt(dot(b, b));
  const double scale = b_norm > 0.0 ? b_norm : 1.0;
  double res = std::sqrt(dot(r, r)) / scale;
  report.residuals.push_back(res);
  if (res <= rel_tol) {
    report.converged = true;
  } else {
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
      a(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0))
        throw std::runtime_error("pcg: operator not positive definite at iteration " + std::to_string(it) +
                                 " (p^T A p = " + std::to_string(pap) + ")");
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      res = std::sqrt(dot(r, r)) / scale;
      report.residuals.push_back(res);
      report.iterations = it;
      if (res <= rel_tol) {
        report.converged = true;
        break;
      }
      precondition(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EigenEstimate estimate_eigenvalues(const LinearOperator& a, std::span<const double> diagonal, int iterations,
                                   unsigned seed) {
  const std::size_t n = diagonal.size();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> r(n), z(n), p(n), ap(n);
  for (auto& v : r) v = dist(rng);
  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / diagonal[i];
  };
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  std::vector<double> alphas, betas;
  for (int it = 0; it < iterations; ++it) {
    a(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0) || !(rz > 0.0)) break;
    const double alpha = rz / pap;
    alphas.push_back(alpha);
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    precondition(r, z);
    const double rz_new = dot(r, z);
    if (!(rz_new > 1e-300 * rz)) break;
    const double beta = rz_new / rz;
    betas.push_back(beta);
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  const int m = static_cast<int>(alphas.size());
  if (m == 0) return {1.0, 1.0};
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t(j, j) = 1.0 / alphas[j] + (j > 0 ? betas[j - 1] / alphas[j - 1] : 0.0);
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = std::sqrt(betas[j]) / alphas[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double estimate_max_eigenvalue(const LinearOperator& a, std::span<const double> diagonal, int iterations,
                               unsigned seed) {
  return estimate_eigenvalues(a, diagonal, iterations, seed).max;
}

int chebyshev_degree_for(double lambda_min, double lambda_max, double target) {
  const double s = std::sqrt(lambda_max / lambda_min);
  const double rho = (s - 1.0) / (s + 1.0);
  for (int p = 1; p < 10000; ++p) {
    const double rp = std::pow(rho, p);
    if (2.0 * rp / (1.0 + rp * rp) <= target) return p;
  }
  return 10000;
}

ChebyshevSmoother::ChebyshevSmoother(LinearOperator a, std::vector<double> diagonal, const ChebyshevConfig& config)
    : a_(std::move(a)), degree_(config.degree) {
  if (!(config.lower > 0.0 && config.lower < config.upper) || config.degree < 1)
    throw std::invalid_argument("ChebyshevSmoother: invalid configuration");
  lambda_max_ = estimate_max_eigenvalue(a_, diagonal, config.eig_iterations);
  lo_ = config.lower * lambda_max_;
  hi_ = config.upper * lambda_max_;
  inv_diag_.resize(diagonal.size());
  for (std::size_t i = 0; i < diagonal.size(); ++i) inv_diag_[i] = 1.0 / diagonal[i];
}

ChebyshevSmoother::ChebyshevSmoother(LinearOperator a, std::vector<double> diagonal, double lambda_min,
                                     double lambda_max, int degree)
    : a_(std::move(a)), lambda_max_(lambda_max), lo_(lambda_min), hi_(lambda_max), degree_(degree) {
  if (!(lambda_min > 0.0 && lambda_min < lambda_max) || degree < 1)
    throw std::invalid_argument("ChebyshevSmoother: invalid interval");
  inv_diag_.resize(diagonal.size());
  for (std::size_t i = 0; i < diagonal.size(); ++i) inv_diag_[i] = 1.0 / diagonal[i];
}

void ChebyshevSmoother::smooth(std::span<const double> b, std::span<double> x, bool zero_start) const {
  const std::size_t n = b.size();
  const double theta = 0.5 * (hi_ + lo_), delta = 0.5 * (hi_ - lo_);
  std::vector<double> r(b.begin(), b.end()), d(n), ad(n);
  if (zero_start) {
    std::fill(x.begin(), x.end(), 0.0);
  } else {
    a_(x, ad);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ad[i];
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = inv_diag_[i] * r[i] / theta;
  const double sigma = theta / delta;
  double rho_old = 1.0 / sigma;
  for (int k = 1; k <= degree_; ++k) {
    for (std::size_t i = 0; i < n; ++i) x[i] += d[i];
    if (k == degree_) break;
    a_(d, ad);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ad[i];
    const double rho = 1.0 / (2.0 * sigma - rho_old);
    for (std::size_t i = 0; i < n; ++i) d[i] = rho * rho_old * d[i] + 2.0 * rho / delta * inv_diag_[i] * r[i];
    rho_old = rho;
  }
}

ILUSmoother::ILUSmoother(std::shared_ptr<const SparseMatrix> a, int sweeps)
    : a_(std::move(a)), ilu_(*a_), sweeps_(sweeps) {}

void ILUSmoother::smooth(std::span<const double> b, std::span<double> x, bool zero_start) const {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n);
  for (int s = 0; s < sweeps_; ++s) {
    if (zero_start && s == 0) {
      ilu_.solve(b, x);
      continue;
    }
    a_->multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    ilu_.solve(r, z);
    for (std::size_t i = 0; i < n; ++i) x[i] += z[i];
  }
}

Multigrid::Multigrid(std::vector<MGLevel> levels, LinearOperator coarse_solve)
    : levels_(std::move(levels)), coarse_(std::move(coarse_solve)) {
  if (levels_.empty()) throw std::invalid_argument("Multigrid: no levels");
  for (std::size_t l = 1; l < levels_.size(); ++l) {
    if (levels_[l].size <= levels_[l - 1].size) throw std::invalid_argument("Multigrid: levels must grow");
    if (levels_[l].restriction.rows() == 0) levels_[l].restriction = levels_[l].prolongation.transpose();
  }
  r_.resize(levels_.size());
  bc_.resize(levels_.size());
  xc_.resize(levels_.size());
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    r_[l].resize(levels_[l].size);
    bc_[l].resize(levels_[l].size);
    xc_[l].resize(levels_[l].size);
  }
}

void Multigrid::cycle(int l, std::span<const double> b, std::span<double> x) const {
  if (l == 0) {
    coarse_(b, x);
    return;
  }
  const MGLevel& lv = levels_[l];
  const std::size_t n = lv.size;
  lv.smoother->smooth(b, x, true);
  std::vector<double>& r = r_[l];
  lv.apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  lv.restriction.multiply(r, bc_[l - 1]);
  cycle(l - 1, bc_[l - 1], xc_[l - 1]);
  lv.prolongation.multiply(xc_[l - 1], r);
  for (std::size_t i = 0; i < n; ++i) x[i] += r[i];
  lv.smoother->smooth(b, x, false);
}

void Multigrid::vcycle(std::span<const double> b, std::span<double> x) const {
  cycle(n_levels() - 1, b, x);
}

LinearOperator Multigrid::as_preconditioner() const {
  return [this](std::span<const double> b, std::span<double> x) { vcycle(b, x); };
}

}  // namespace fembench
