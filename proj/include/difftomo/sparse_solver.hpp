#pragma once

// l1-l2 recovery of sparse link delays: minimize 0.5*|b - Mx|^2 + lambda*|x|_1
// by accelerated proximal gradient with a monotone restart correction, plus a
// brute-force least-squares oracle over all k-subsets for small instances.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "difftomo/error.hpp"
#include "difftomo/format.hpp"
#include "difftomo/tomo_matrix.hpp"

namespace difftomo {

struct SolveOptions {
  double lambda_rel = 0.1;  // lambda = lambda_rel * |M^T b|_inf
  int max_iters = 10000;
  double rel_tol = 1e-8;  // on the iterate change
  double support_threshold_ms = 1.0;  // tau
  bool record_trace = false;
};

inline void validate_solve_options(const SolveOptions& o) {
  if (!(o.lambda_rel > 0.0 && o.lambda_rel < 1.0))
    throw Error("lambda_rel must be in (0,1)");
  if (o.max_iters < 1) throw Error("max_iters must be >= 1");
  if (!(o.rel_tol > 0.0)) throw Error("rel_tol must be > 0");
  if (!(o.support_threshold_ms > 0.0)) throw Error("support_threshold_ms must be > 0");
}

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double residual_inf = 0.0;  // |M^T (b - Mx)|_inf
};

struct SolveResult {
  std::vector<double> estimate;  // x-hat, ms, unconstrained sign
  std::vector<int> support;  // 1-based columns with estimate > tau
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<TraceRow> trace;
};

// Strictly positive entries above tau; negative estimates never qualify
// (negativity is diagnostic of an ambiguous system, not congestion).
inline std::vector<int> identify_support(std::span<const double> x, double tau) {
  if (!(tau > 0.0)) throw Error("support threshold must be > 0");
  std::vector<int> s;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] > tau) s.push_back(static_cast<int>(j) + 1);
  return s;
}

namespace detail {

inline Eigen::MatrixXd to_eigen(MatrixView m) {
  Eigen::MatrixXd a(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) a(i, j) = m.at(i, j);
  return a;
}

// Largest eigenvalue of the PSD matrix G by power iteration: 200 steps,
// stopping when successive Rayleigh quotients agree to 1e-10.
inline double power_iteration_lmax(const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(g.rows());
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = 1.0 + 0.001 * (j + 1);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = g * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(g * v);
    if (std::fabs(next - lam) <= 1e-10 * std::max(1.0, std::fabs(next))) return next;
    lam = next;
  }
  return lam;
}

inline double objective_value(const Eigen::MatrixXd& m, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& x, double lam) {
  return 0.5 * (b - m * x).squaredNorm() + lam * x.lpNorm<1>();
}

inline Eigen::VectorXd shrink(const Eigen::VectorXd& v, double t) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double a = std::fabs(v(j)) - t;
    out(j) = a > 0.0 ? (v(j) > 0.0 ? a : -a) : 0.0;
  }
  return out;
}

}  // namespace detail

// Deterministic from the zero iterate: step 1/L with L from power iteration,
// soft-thresholding prox, momentum reset whenever the accelerated candidate
// would raise the objective (the plain step from the previous iterate is
// taken instead, which keeps the objective non-increasing).
inline SolveResult solve_l1_l2(MatrixView m, std::span<const double> b,
                               const SolveOptions& opts) {
  validate_solve_options(opts);
  if (static_cast<int>(b.size()) != m.rows)
    throw Error("measurement length " + std::to_string(b.size()) +
                " does not match row count " + std::to_string(m.rows));
  for (int j = 0; j < m.cols; ++j) {
    bool zero = true;
    for (int i = 0; i < m.rows && zero; ++i) zero = m.at(i, j) == 0;
    if (zero)
      throw Error("zero column: link " + std::to_string(j + 1) +
                  " covered by no path / cancelled by reference");
  }
  const Eigen::MatrixXd a = detail::to_eigen(m);
  Eigen::VectorXd bv(m.rows);
  for (int i = 0; i < m.rows; ++i) bv(i) = b[static_cast<std::size_t>(i)];

  SolveResult res;
  res.estimate.assign(static_cast<std::size_t>(m.cols), 0.0);
  const double lam = opts.lambda_rel * (a.transpose() * bv).lpNorm<Eigen::Infinity>();
  if (lam == 0.0) {  // M^T b = 0: x = 0 is stationary for the pure LS term
    res.converged = true;
    res.objective = 0.5 * bv.squaredNorm();
    return res;
  }
  const double lmax = detail::power_iteration_lmax(a.transpose() * a);
  if (!(lmax > 0.0)) throw Error("degenerate system: M^T M has no positive eigenvalue");
  const double step = 1.0 / lmax;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(m.cols);
  Eigen::VectorXd y = x;
  double t = 1.0;
  double f_prev = detail::objective_value(a, bv, x, lam);
  for (int it = 1; it <= opts.max_iters; ++it) {
    Eigen::VectorXd cand = detail::shrink(y - step * (a.transpose() * (a * y - bv)), step * lam);
    double f_cand = detail::objective_value(a, bv, cand, lam);
    if (f_cand > f_prev) {
      cand = detail::shrink(x - step * (a.transpose() * (a * x - bv)), step * lam);
      f_cand = detail::objective_value(a, bv, cand, lam);
      t = 1.0;
      if (f_cand > f_prev) {  // round-off floor reached; stop at the incumbent
        cand = x;
        f_cand = f_prev;
      }
    }
    const double dx = (cand - x).norm();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = cand + ((t - 1.0) / t_next) * (cand - x);
    x = cand;
    t = t_next;
    f_prev = f_cand;
    res.iterations = it;
    if (opts.record_trace)
      res.trace.push_back(
          {it, f_cand, (a.transpose() * (bv - a * x)).lpNorm<Eigen::Infinity>()});
    if (dx <= opts.rel_tol * std::max(1.0, x.norm())) {
      res.converged = true;
      break;
    }
  }
  for (int j = 0; j < m.cols; ++j) res.estimate[static_cast<std::size_t>(j)] = x(j);
  res.objective = f_prev;
  res.support = identify_support(res.estimate, opts.support_threshold_ms);
  return res;
}

namespace detail {

inline std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || k > n) return 0;
  i128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // partial products stay integral
    if (r > static_cast<i128>(cap)) return cap + 1;
  }
  return static_cast<std::uint64_t>(r);
}

// Colex successor over 0-based positions: {0,1},{0,2},{1,2},{0,3},...
inline void colex_next(std::vector<int>& c) {
  std::size_t i = 0;
  while (i + 1 < c.size() && c[i] + 1 == c[i + 1]) {
    c[i] = static_cast<int>(i);
    ++i;
  }
  ++c[i];
}

}  // namespace detail

// Exhaustive least-squares oracle: every k-subset of columns is fitted to b;
// kept when the relative residual is within fit_tol and every fitted entry
// exceeds min_magnitude in absolute value (signs unconstrained, so antipodal
// ambiguities surface). Supports are returned in colex enumeration order.
inline std::vector<std::vector<int>> brute_force_recover(MatrixView m,
                                                         std::span<const double> b,
                                                         int k, double fit_tol,
                                                         double min_magnitude = 1.0) {
  if (k < 1 || k > m.cols)
    throw Error("subset size " + std::to_string(k) + " out of range 1.." +
                std::to_string(m.cols));
  if (static_cast<int>(b.size()) != m.rows)
    throw Error("measurement length does not match row count");
  if (!(fit_tol >= 0.0)) throw Error("fit_tol must be >= 0");
  const std::uint64_t count = detail::binomial_capped(m.cols, k, 1000000);
  if (count > 1000000)
    throw Error("subset count exceeds brute-force guard of 1000000");
  Eigen::VectorXd bv(m.rows);
  for (int i = 0; i < m.rows; ++i) bv(i) = b[static_cast<std::size_t>(i)];
  const double bnorm = bv.norm();
  std::vector<std::vector<int>> found;
  if (bnorm == 0.0) return found;
  const Eigen::MatrixXd a = detail::to_eigen(m);
  std::vector<int> comb(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd sub(m.rows, k);
  for (std::uint64_t n = 0; n < count; ++n, n < count ? detail::colex_next(comb) : void()) {
    for (int c = 0; c < k; ++c) sub.col(c) = a.col(comb[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd xs = sub.completeOrthogonalDecomposition().solve(bv);
    if ((bv - sub * xs).norm() / bnorm > fit_tol) continue;
    bool strong = true;
    for (int c = 0; c < k && strong; ++c) strong = std::fabs(xs(c)) > min_magnitude;
    if (!strong) continue;
    std::vector<int> s;
    for (int c = 0; c < k; ++c) s.push_back(comb[static_cast<std::size_t>(c)] + 1);
    std::sort(s.begin(), s.end());
    found.push_back(std::move(s));
  }
  return found;
}

inline std::string solver_trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "iteration,objective,residual_inf\n";
  for (const TraceRow& r : trace)
    out << r.iteration << "," << fmt_g(r.objective, 9) << "," << fmt_g(r.residual_inf, 9)
        << "\n";
  return out.str();
}

}  // namespace difftomo
