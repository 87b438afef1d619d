#pragma once

// Primal augmented Lagrange multiplier (PALM) solver for
//
//   min_{x,r} ||x||_1 + (1/(2 mu)) ||r||^2   subject to  A x + r = b
//
// using the augmented Lagrangian
//
//   L(x, r, y) = ||x||_1 + (1/(2 mu)) ||r||^2 - y^T (A x + r - b)
//                + (beta/2) ||A x + r - b||^2
//
// and one sweep per iteration of
//
//   r+ = (mu beta / (1 + mu beta)) (y / beta - (A x - b))   exact r-minimizer
//   g  = A^T (A x + r+ - b - y / beta)                      linearization point
//   x+ = shrink(x - tau g, tau / beta)                      proximal x-step
//   y+ = y - gamma beta (A x+ + r+ - b)                     multiplier ascent
//
// The x-step is exact for A A^T = I and otherwise requires
// tau * sigma_max(A)^2 <= 1.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "palm/error.hpp"
#include "palm/linops.hpp"
#include "palm/sensing.hpp"
#include "palm/shrinkage.hpp"

namespace palm {

struct PalmParams {
  double mu = 1.0;     // weight of the residual term
  double beta = 1.0;   // penalty parameter
  double tau = 1.0;    // proximal step
  double gamma = 1.0;  // multiplier step, 0 < gamma < 2
  std::size_t max_iter = 5000;
  double tol_feasibility = 1e-6;
  double tol_x_change = 1e-6;

  void validate() const {
    if (!(mu > 0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be positive and finite");
    if (!(beta > 0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive and finite");
    if (!(tau > 0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive and finite");
    if (!(gamma > 0 && gamma < 2)) throw std::invalid_argument("gamma must lie in (0, 2)");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (!(tol_feasibility >= 0) || !(tol_x_change >= 0)) throw std::invalid_argument("tolerances must be nonnegative");
  }
};

// Solver configuration with data-dependent defaults left open. Unset mu and
// beta resolve against the measurement vector:
//   mu   = mu_relative * ||b||_inf   (mu_relative = 1e-3)
//   beta = m / ||b||_1
// For b = 0 both fall back to mu = 1e-3, beta = 1.
struct PalmSettings {
  std::optional<double> mu;
  std::optional<double> beta;
  double mu_relative = 1e-3;
  double tau = 1.0;
  double gamma = 1.0;
  std::size_t max_iter = 5000;
  double tol_feasibility = 1e-6;
  double tol_x_change = 1e-6;

  PalmParams resolve(std::span<const double> b) const {
    PalmParams p;
    const double binf = norm_inf(b);
    const double b1 = norm1(b);
    p.mu = mu ? *mu : (binf > 0 ? mu_relative * binf : 1e-3);
    p.beta = beta ? *beta : (b1 > 0 ? static_cast<double>(b.size()) / b1 : 1.0);
    p.tau = tau;
    p.gamma = gamma;
    p.max_iter = max_iter;
    p.tol_feasibility = tol_feasibility;
    p.tol_x_change = tol_x_change;
    return p;
  }
};

inline PalmParams default_params(std::span<const double> b) { return PalmSettings{}.resolve(b); }

struct PalmState {
  Vec x;
  Vec r;
  Vec y;
  std::size_t k = 0;
};

struct PalmResult {
  Vec x;
  Vec r;
  Vec y;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> feasibility_history;  // ||A x^k + r^k - b||_2
  std::vector<double> objective_history;    // ||x^k||_1 + ||r^k||^2 / (2 mu)
  std::vector<std::string> warnings;
};

struct KktReport {
  double dual_feasibility = 0;        // max(0, ||A^T y||_inf - 1)
  double complementarity = 0;         // max over supp(x) of |(A^T y)_j - sign(x_j)|
  double primal_feasibility = 0;      // ||A x + r - b||_2
  double multiplier_consistency = 0;  // ||y - r / mu||_inf

  double worst() const noexcept {
    return std::max(std::max(dual_feasibility, complementarity), std::max(primal_feasibility, multiplier_consistency));
  }
};

namespace detail {

inline void check_system(const SensingOperator& a, std::span<const double> b) {
  if (b.size() != a.rows()) throw DimensionError("measurement length must equal operator rows", a.rows(), b.size());
}

inline void check_primal(const SensingOperator& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw DimensionError("x length must equal operator columns", a.cols(), x.size());
}

inline void check_dual(const SensingOperator& a, std::span<const double> v, const char* what) {
  if (v.size() != a.rows()) throw DimensionError(what, a.rows(), v.size());
}

// r-update given the precomputed product ax = A x.
inline void update_r_into(std::span<const double> ax, std::span<const double> b, std::span<const double> y,
                          double mu, double beta, std::span<double> r) {
  const double c = mu * beta / (1.0 + mu * beta);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = c * (y[i] / beta - (ax[i] - b[i]));
}

// Writes the linearization residual A x + r - b - y / beta into t.
inline void linearization_residual(std::span<const double> ax, std::span<const double> r,
                                   std::span<const double> b, std::span<const double> y, double beta,
                                   std::span<double> t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = ax[i] + r[i] - b[i] - y[i] / beta;
}

inline void update_x_into(std::span<const double> x, std::span<const double> g, double tau, double beta,
                          std::span<double> out) {
  const double alpha = tau / beta;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = shrink(x[j] - tau * g[j], alpha);
}

}  // namespace detail

// L(x, r, y) evaluated directly.
inline double augmented_lagrangian(const SensingOperator& a, std::span<const double> b, std::span<const double> x,
                                   std::span<const double> r, std::span<const double> y, double mu, double beta) {
  detail::check_system(a, b);
  detail::check_primal(a, x);
  detail::check_dual(a, r, "r length must equal operator rows");
  detail::check_dual(a, y, "y length must equal operator rows");
  const Vec ax = matvec(a, x);
  double lin = 0;
  double quad = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double c = ax[i] + r[i] - b[i];
    lin += y[i] * c;
    quad += c * c;
  }
  const double rn = norm2(r);
  return norm1(x) + rn * rn / (2.0 * mu) - lin + 0.5 * beta * quad;
}

inline Vec update_r(const SensingOperator& a, std::span<const double> b, std::span<const double> x_k,
                    std::span<const double> y_k, double mu, double beta) {
  detail::check_system(a, b);
  detail::check_dual(a, y_k, "y length must equal operator rows");
  const Vec ax = matvec(a, x_k);
  Vec r(a.rows());
  detail::update_r_into(ax, b, y_k, mu, beta, r);
  return r;
}

// g = A^T (A x_k + r_next - b - y_k / beta); beta * g is the gradient of
// (beta/2) ||A x + r_next - b - y_k / beta||^2 at x_k.
inline Vec gradient_g(const SensingOperator& a, std::span<const double> b, std::span<const double> x_k,
                      std::span<const double> r_next, std::span<const double> y_k, double beta) {
  detail::check_system(a, b);
  detail::check_dual(a, r_next, "r length must equal operator rows");
  detail::check_dual(a, y_k, "y length must equal operator rows");
  const Vec ax = matvec(a, x_k);
  Vec t(a.rows());
  detail::linearization_residual(ax, r_next, b, y_k, beta, t);
  return adjoint_matvec(a, t);
}

inline Vec update_x(std::span<const double> x_k, std::span<const double> g_k, double tau, double beta) {
  require_same_length(x_k, g_k, "update_x: x and g length mismatch");
  if (!(tau > 0) || !(beta > 0)) throw std::invalid_argument("update_x: tau and beta must be positive");
  Vec out(x_k.size());
  detail::update_x_into(x_k, g_k, tau, beta, out);
  return out;
}

inline Vec update_y(std::span<const double> y_k, const SensingOperator& a, std::span<const double> x_next,
                    std::span<const double> r_next, std::span<const double> b, double gamma, double beta) {
  detail::check_system(a, b);
  detail::check_dual(a, y_k, "y length must equal operator rows");
  detail::check_dual(a, r_next, "r length must equal operator rows");
  const Vec ax = matvec(a, x_next);
  Vec y(y_k.begin(), y_k.end());
  const double step = gamma * beta;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= step * (ax[i] + r_next[i] - b[i]);
  return y;
}

// Per-iteration diagnostics. One fixed-width line per record:
//   "%10zu %24.16e %24.16e\n"  (iteration, objective, feasibility)
struct TraceRecord {
  std::size_t iteration;
  double objective;
  double feasibility;
};

inline std::string format_trace(const TraceRecord& rec) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%10zu %24.16e %24.16e\n", rec.iteration, rec.objective, rec.feasibility);
  return buf;
}

struct SolveOptions {
  std::optional<Vec> x0;
  std::optional<Vec> y0;
  std::ostream* trace = nullptr;
  std::ostream* warnings = nullptr;
};

// Runs the PALM iteration from x0 (default 0) and y0 (default 0).
//
// Stops once both
//   ||A x + r - b||_2       <= tol_feasibility * max(1, ||b||_2)
//   ||x^{k+1} - x^k||_2     <= tol_x_change * max(1, ||x^k||_2)
// hold, or after max_iter iterations. Throws DivergenceError on any
// non-finite iterate.
inline PalmResult solve(const SensingOperator& a, std::span<const double> b, const PalmParams& params,
                        const SolveOptions& opts = {}) {
  params.validate();
  detail::check_system(a, b);
  if (!all_finite(b)) throw std::invalid_argument("measurement vector contains non-finite values");

  const std::size_t m = a.rows();
  const std::size_t n = a.cols();

  PalmResult res;
  if (!a.rows_orthonormal()) {
    const double sigma = spectral_norm_estimate(a, 50);
    if (params.tau * sigma * sigma > 1.0) {
      res.warnings.push_back("tau * sigma_max(A)^2 = " + std::to_string(params.tau * sigma * sigma) +
                             " exceeds 1; the proximal x-step may not converge");
      if (opts.warnings) *opts.warnings << "warning: " << res.warnings.back() << '\n';
    }
  }

  Vec x = opts.x0 ? *opts.x0 : Vec(n, 0.0);
  Vec y = opts.y0 ? *opts.y0 : Vec(m, 0.0);
  detail::check_primal(a, x);
  detail::check_dual(a, y, "initial y length must equal operator rows");

  Vec ax(m);
  Vec r(m);
  Vec t(m);
  Vec g(n);
  Vec x_next(n);
  Vec ax_next(m);
  matvec_into(a, x, ax);

  const double feas_scale = std::max(1.0, norm2(b));
  const double step = params.gamma * params.beta;
  res.feasibility_history.reserve(std::min<std::size_t>(params.max_iter, 1024));
  res.objective_history.reserve(std::min<std::size_t>(params.max_iter, 1024));

  for (std::size_t k = 1; k <= params.max_iter; ++k) {
    detail::update_r_into(ax, b, y, params.mu, params.beta, r);
    if (!all_finite(r)) throw DivergenceError(k, "update_r");

    detail::linearization_residual(ax, r, b, y, params.beta, t);
    adjoint_matvec_into(a, t, g);
    detail::update_x_into(x, g, params.tau, params.beta, x_next);
    if (!all_finite(x_next)) throw DivergenceError(k, "update_x");

    matvec_into(a, x_next, ax_next);
    double feas2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double c = ax_next[i] + r[i] - b[i];
      feas2 += c * c;
      y[i] -= step * c;
    }
    if (!all_finite(y)) throw DivergenceError(k, "update_y");

    double dx2 = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = x_next[j] - x[j];
      dx2 += d * d;
    }
    const double x_scale = std::max(1.0, norm2(x));
    const double feas = std::sqrt(feas2);
    const double rn = norm2(r);
    const double objective = norm1(x_next) + rn * rn / (2.0 * params.mu);

    x.swap(x_next);
    ax.swap(ax_next);
    res.feasibility_history.push_back(feas);
    res.objective_history.push_back(objective);
    res.iterations = k;
    if (opts.trace) *opts.trace << format_trace({k, objective, feas});

    if (feas <= params.tol_feasibility * feas_scale && std::sqrt(dx2) <= params.tol_x_change * x_scale) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.r = std::move(r);
  res.y = std::move(y);
  return res;
}

inline PalmResult solve(const SensingOperator& a, std::span<const double> b, const PalmParams& params,
                        std::optional<Vec> x0) {
  SolveOptions opts;
  opts.x0 = std::move(x0);
  return solve(a, b, params, opts);
}

// First-order optimality residuals of the returned iterate.
inline KktReport kkt_report(const SensingOperator& a, std::span<const double> b, const PalmResult& result,
                            double mu) {
  detail::check_system(a, b);
  detail::check_primal(a, result.x);
  detail::check_dual(a, result.r, "r length must equal operator rows");
  detail::check_dual(a, result.y, "y length must equal operator rows");
  KktReport rep;
  const Vec aty = adjoint_matvec(a, result.y);
  rep.dual_feasibility = std::max(0.0, norm_inf(aty) - 1.0);
  for (std::size_t j = 0; j < result.x.size(); ++j) {
    if (result.x[j] != 0.0) {
      const double s = result.x[j] > 0 ? 1.0 : -1.0;
      rep.complementarity = std::max(rep.complementarity, std::abs(aty[j] - s));
    }
  }
  const Vec ax = matvec(a, result.x);
  double p2 = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double c = ax[i] + result.r[i] - b[i];
    p2 += c * c;
    rep.multiplier_consistency = std::max(rep.multiplier_consistency, std::abs(result.y[i] - result.r[i] / mu));
  }
  rep.primal_feasibility = std::sqrt(p2);
  return rep;
}

}  // namespace palm
