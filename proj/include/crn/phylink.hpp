#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crn/capacity.hpp"
#include "crn/transport.hpp"

namespace crn {

// Bandwidth and transmit covariance for every outgoing link of one node,
// aligned with NodeContext::link_ids.
struct NodeDecision {
  int node_id = 0;
  std::vector<double> bandwidth;  // W_ls
  std::vector<CMat> covariance;   // Q_ls
};

struct StepDiagnostics {
  bool converged = true;
  bool warning = false;
  double kkt_residual = 0.0;  // projected gradient norm of the Lagrangian
  double objective = 0.0;
  double multiplier_power = 0.0;   // budget constraint multiplier
  double multiplier_rate = 0.0;    // PU surrogate constraint multiplier
};

struct AlternatingResult {
  NodeDecision decision;
  std::vector<double> objective_trace;
  std::vector<NodeDecision> iterates;  // filled only when requested
  bool converged = true;
  bool warning = false;
  double kkt_residual = 0.0;
};

inline std::vector<double> node_prices(const NodeContext& ctx, const PriceVector& prices) {
  std::vector<double> u;
  u.reserve(ctx.link_ids.size());
  for (int lid : ctx.link_ids) u.push_back(prices.u(lid));
  return u;
}

// Objective of the physical-link subproblem: sum u Phi(W, Q) - t Tr(Q).
inline double node_objective(const NodeContext& ctx, const std::vector<double>& u,
                             const std::vector<double>& w, const std::vector<CMat>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ctx.links.size(); ++i)
    acc += u[i] * link_capacity(w[i], q[i], ctx.links[i]) - ctx.links[i].t_weight * trace_re(q[i]);
  return acc;
}

// Worst constraint violation of a candidate decision against the true
// (non-linearized) constraints of the node subproblem.
inline double node_violation(const NodeContext& ctx, const std::vector<double>& w, const std::vector<CMat>& q) {
  double v = 0.0;
  double wsum = 0.0, psum = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < ctx.links.size(); ++i) {
    wsum += w[i];
    psum += trace_re(q[i]);
    v = std::max(v, -w[i]);
    neg = std::max(neg, -min_eigenvalue(q[i]));
  }
  v = std::max(v, neg);
  v = std::max(v, wsum - ctx.bandwidth);
  v = std::max(v, psum - ctx.power_cap);
  // the PU rate is only defined within the PU band and over PSD covariances;
  // outside that regime the violations above already witness infeasibility
  if (wsum <= ctx.pu_bandwidth * (1.0 + 1e-9) && neg <= 1e-8)
    v = std::max(v, ctx.min_rate - pu_rate(w, q, ctx));
  else
    v = std::max(v, wsum - ctx.pu_bandwidth);
  return v;
}

namespace detail {

constexpr double kBarrierFloor = 1e-8;  // centralized barrier schedule floor
constexpr double kKktTol = 1e-4;

// number of stages to sweep mu_init down to the barrier floor
inline int barrier_stage_count(double mu_init, double mu_decrease) {
  if (mu_init <= kBarrierFloor) return 1;
  return 1 + static_cast<int>(std::floor(std::log(mu_init / kBarrierFloor) / std::log(mu_decrease) + 1e-9));
}

inline double block_norm(const std::vector<CMat>& a) {
  double acc = 0.0;
  for (const CMat& m : a) acc += m.squaredNorm();
  return std::sqrt(acc);
}

// Water-filling solution of max_{Q >= 0} u Phi(W, Q) - Re Tr(M Q) for one
// link: substitute B = M^{1/2} Q M^{1/2}, diagonalize the whitened Gram
// matrix M^{-1/2} A^H A M^{-1/2} = V diag(s^2) V^H and fill
// p_k = W (u - 1/s_k^2)^+ along V. `gram` is A^H A, precomputed per link.
// Returns false when M is singular on a direction the channel can use,
// meaning the inner maximum is unbounded and the power multiplier must grow.
inline bool waterfill_link(const CMat& gram, double w, double u, const CMat& m_price, CMat* q_out) {
  const int t = static_cast<int>(gram.cols());
  RVec d;
  CMat v;
  hermitian_eig(m_price, &d, &v);
  if (d.minCoeff() <= 1e-14 * std::max(1.0, d.maxCoeff())) return false;
  CMat m_inv_sqrt = v * d.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
  RVec s2;
  CMat vz;
  hermitian_eig(hermitize(m_inv_sqrt * gram * m_inv_sqrt), &s2, &vz);
  RVec p = RVec::Zero(t);
  for (int k = 0; k < t; ++k)
    if (s2(k) > 1e-300) p(k) = w * std::max(u - 1.0 / s2(k), 0.0);
  CMat b = vz * p.asDiagonal() * vz.adjoint();
  *q_out = hermitize(m_inv_sqrt * b * m_inv_sqrt);
  return true;
}

struct QDualEval {
  bool bounded = false;
  double power = 0.0;
  double rate = 0.0;  // surrogate PU rate
  std::vector<CMat> q;
};

// Safeguarded secant/bisection search on a bracket [lo, hi] where
// violation(lo) > 0 >= violation(hi); returns the feasible (hi) endpoint.
// The violation callback may cache its evaluation via side effects.
template <class F>
inline double feasible_root(F&& violation, double lo, double hi, double v_lo, double v_hi, double xtol,
                            int maxit = 60) {
  double a = lo, b = hi, fa = v_lo, fb = v_hi;
  for (int it = 0; it < maxit && (b - a) > xtol * (1.0 + std::abs(b)); ++it) {
    double x = 0.5 * (a + b);
    if (std::abs(fb - fa) > 1e-300) {
      const double s = b - fb * (b - a) / (fb - fa);
      if (s > a + 0.01 * (b - a) && s < b - 0.01 * (b - a)) x = s;
    }
    const double fx = violation(x);
    if (fx > 0.0) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
  }
  return b;
}

// Evaluates the per-link water-filling at multipliers (power, rate) of the
// convex Q subproblem. `grams` holds white^H white per link.
inline QDualEval q_dual_eval(const NodeContext& ctx, const std::vector<CMat>& grams,
                             const std::vector<double>& w_fixed, const std::vector<double>& u,
                             const AffineRateModel& model, double lambda_power, double lambda_rate) {
  const std::size_t m = ctx.links.size();
  const int t = static_cast<int>(ctx.links[0].h.cols());
  QDualEval ev;
  ev.q.assign(m, CMat::Zero(t, t));
  for (std::size_t i = 0; i < m; ++i) {
    if (u[i] <= 0.0 || w_fixed[i] <= 0.0) continue;  // capacity term absent; Q = 0 optimal
    CMat m_price = (ctx.links[i].t_weight + lambda_power) * CMat::Identity(t, t);
    if (lambda_rate > 0.0 && model.q_coeffs[i].size() != 0) m_price -= lambda_rate * model.q_coeffs[i];
    if (!waterfill_link(grams[i], w_fixed[i], u[i], m_price, &ev.q[i])) return ev;
  }
  ev.bounded = true;
  for (const CMat& qi : ev.q) ev.power += trace_re(qi);
  ev.rate = model.value(w_fixed, ev.q);
  return ev;
}

// Lagrangian KKT residual at the returned point: projected gradient norm of
// sum u Phi - t Tr(Q) - lp (Tr sum) + lr (surrogate), projection on the PSD
// cone blockwise.
inline double q_kkt_residual(const NodeContext& ctx, const std::vector<double>& w_fixed,
                             const std::vector<double>& u, const AffineRateModel& model,
                             const std::vector<CMat>& q, double lp, double lr) {
  const double h = 1e-7;
  const int t = static_cast<int>(ctx.links[0].h.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    CMat g = -(ctx.links[i].t_weight + lp) * CMat::Identity(t, t);
    if (u[i] > 0.0 && w_fixed[i] > 0.0) g += u[i] * capacity_grad_q(w_fixed[i], q[i], ctx.links[i]);
    if (lr > 0.0 && model.q_coeffs[i].size() != 0) g += lr * model.q_coeffs[i];
    acc += (psd_project(q[i] + h * g) - q[i]).squaredNorm();
  }
  return std::sqrt(acc) / h;
}

}  // namespace detail

// Warm-start hints for the multiplier searches; negative means unknown.
struct MultiplierHints {
  double q_power = -1.0;
  double q_rate = -1.0;
  double w_band = -1.0;
  double w_rate = -1.0;
};

// Convex subproblem in Q at fixed W against a given affine PU surrogate:
//   maximize sum u Phi(W, Q) - t Tr(Q)
//   s.t. sum Tr(Q) <= alpha P, surrogate(Q) >= R_min, Q PSD.
// Solved exactly in the dual: a safeguarded root search on the rate
// multiplier around one on the power multiplier, with closed-form
// water-filling per link. Any admitted point also satisfies the true PU
// constraint because the surrogate under-estimates the true rate.
inline std::pair<std::vector<CMat>, StepDiagnostics> solve_q_step_with_model(
    const NodeContext& ctx, const std::vector<double>& w_fixed, const std::vector<CMat>& q_start,
    const std::vector<double>& u, const AffineRateModel& model, const SolverParams& params,
    MultiplierHints* hints = nullptr) {
  (void)params;
  const std::size_t m = ctx.links.size();
  StepDiagnostics diag;
  if (m == 0) return {{}, diag};
  if (node_violation(ctx, w_fixed, q_start) > 1e-6)
    throw std::runtime_error("solve_q_step: infeasible starting point");
  const int t = static_cast<int>(ctx.links[0].h.cols());

  bool any_price = false;
  for (std::size_t i = 0; i < m; ++i) any_price |= u[i] > 0.0 && w_fixed[i] > 0.0;
  if (!any_price) {
    // objective reduces to -sum t Tr(Q): the zero covariance is optimal
    std::vector<CMat> zero(m, CMat::Zero(t, t));
    diag.objective = node_objective(ctx, u, w_fixed, zero);
    return {zero, diag};
  }

  std::vector<CMat> grams(m);
  for (std::size_t i = 0; i < m; ++i) grams[i] = hermitize(ctx.links[i].white.adjoint() * ctx.links[i].white);
  auto eval = [&](double lp, double lr) { return detail::q_dual_eval(ctx, grams, w_fixed, u, model, lp, lr); };

  // inner solve: smallest power multiplier keeping the budget
  auto solve_power = [&](double lr) {
    detail::QDualEval ev = eval(0.0, lr);
    if (ev.bounded && ev.power <= ctx.power_cap) return std::make_pair(0.0, ev);
    const double v0 = ev.bounded ? ev.power - ctx.power_cap : 1e300;
    double hi = hints && hints->q_power > 0.0 ? hints->q_power * 0.25 : 1e-6;
    detail::QDualEval ev_hi = eval(hi, lr);
    int guard = 0;
    double lo = 0.0, v_lo = v0;
    while ((!ev_hi.bounded || ev_hi.power > ctx.power_cap) && guard++ < 100) {
      lo = hi;
      v_lo = ev_hi.bounded ? ev_hi.power - ctx.power_cap : 1e300;
      hi *= 4.0;
      ev_hi = eval(hi, lr);
    }
    detail::QDualEval ev_best = ev_hi;
    auto violation = [&](double x) {
      detail::QDualEval e = eval(x, lr);
      const double v = e.bounded ? e.power - ctx.power_cap : 1e300;
      if (v <= 0.0) ev_best = std::move(e);
      return v;
    };
    const double root =
        detail::feasible_root(violation, lo, hi, v_lo, ev_hi.power - ctx.power_cap, 1e-13);
    return std::make_pair(root, ev_best);
  };

  const double rate_tol = 1e-11 * (1.0 + std::abs(ctx.min_rate));
  auto [lp0, ev0] = solve_power(0.0);
  double lp = lp0, lr = 0.0;
  detail::QDualEval ev = ev0;
  if (ev0.rate < ctx.min_rate - rate_tol) {
    // rate constraint active: outer root search on its multiplier
    double lr_hi = hints && hints->q_rate > 0.0 ? hints->q_rate * 0.25 : 1e-6;
    auto [lph, evh] = solve_power(lr_hi);
    int guard = 0;
    double lr_lo = 0.0, v_lo = ctx.min_rate - ev0.rate;
    while (evh.rate < ctx.min_rate && guard++ < 100) {
      lr_lo = lr_hi;
      v_lo = ctx.min_rate - evh.rate;
      lr_hi *= 4.0;
      std::tie(lph, evh) = solve_power(lr_hi);
    }
    lp = lph;
    ev = evh;
    lr = lr_hi;
    auto violation = [&](double x) {
      auto [lpx, evx] = solve_power(x);
      const double v = ctx.min_rate - evx.rate;
      if (v <= 0.0) {
        lp = lpx;
        ev = std::move(evx);
        lr = x;
      }
      return v;
    };
    detail::feasible_root(violation, lr_lo, lr_hi, v_lo, ctx.min_rate - ev.rate, 1e-13);
  }
  if (hints) {
    hints->q_power = lp;
    hints->q_rate = lr;
  }

  if (!ev.bounded || ev.rate < ctx.min_rate - rate_tol) {
    // no bracketing possible; keep the tangency point
    diag.warning = true;
    diag.objective = node_objective(ctx, u, w_fixed, q_start);
    return {q_start, diag};
  }
  if (ev.power > ctx.power_cap && ev.power > 0.0) {
    const double rho = ctx.power_cap / ev.power;
    for (CMat& qi : ev.q) qi *= rho;
  }

  diag.multiplier_power = lp;
  diag.multiplier_rate = lr;
  diag.kkt_residual = detail::q_kkt_residual(ctx, w_fixed, u, model, ev.q, lp, lr);
  diag.converged = diag.kkt_residual <= detail::kKktTol;
  diag.warning = !diag.converged;

  // never regress against the starting point, which is feasible by tangency
  const double start_obj = node_objective(ctx, u, w_fixed, q_start);
  diag.objective = node_objective(ctx, u, w_fixed, ev.q);
  if (diag.objective < start_obj) {
    diag.objective = start_obj;
    return {q_start, diag};
  }
  return {ev.q, diag};
}

inline std::pair<std::vector<CMat>, StepDiagnostics> solve_q_step(
    const NodeContext& ctx, const std::vector<double>& w_fixed, const std::vector<CMat>& q_tilde,
    const std::vector<double>& u, const SolverParams& params, MultiplierHints* hints = nullptr) {
  if (ctx.links.empty()) return {{}, StepDiagnostics{}};
  bool any_price = false;
  for (double ui : u) any_price |= ui > 0.0;
  if (!any_price) return solve_q_step_with_model(ctx, w_fixed, q_tilde, u, AffineRateModel{}, params, hints);
  AffineRateModel model = linearize_pu_rate_in_q(q_tilde, w_fixed, ctx);
  return solve_q_step_with_model(ctx, w_fixed, q_tilde, u, model, params, hints);
}

namespace detail {

// Root of u Phi'(W) = price on [floor_w, w_max]; Phi'(W) is positive and
// strictly decreasing, evaluated from the cached eigenvalues of the
// whitened signal covariance.
inline double w_root(const RVec& eigs, double u, double price, double floor_w, double w_max) {
  auto dphi = [&](double w) {
    double acc = 0.0;
    for (int k = 0; k < eigs.size(); ++k)
      if (eigs(k) > 0.0) acc += std::log1p(eigs(k) / w) - eigs(k) / (w + eigs(k));
    return u * acc;
  };
  if (price <= 0.0 || dphi(w_max) >= price) return w_max;
  if (dphi(floor_w) <= price) return floor_w;
  double lo = floor_w, hi = w_max;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dphi(mid) >= price ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Convex subproblem in W at fixed Q against the affine W-surrogate:
//   maximize sum u Phi(W, Q) s.t. sum W <= B, W >= 0, surrogate(W) >= R_min.
// Same dual strategy as the Q step; each link's bandwidth is the root of a
// scalar monotone equation. The caller re-checks the true PU rate before
// accepting the result, since this surrogate is not certified one-sided.
inline std::pair<std::vector<double>, StepDiagnostics> solve_w_step(
    const NodeContext& ctx, const std::vector<CMat>& q_fixed, const std::vector<double>& w_tilde,
    const std::vector<double>& u, const SolverParams& params, MultiplierHints* hints = nullptr) {
  const std::size_t m = ctx.links.size();
  StepDiagnostics diag;
  if (m == 0) return {{}, diag};
  if (node_violation(ctx, w_tilde, q_fixed) > 1e-6)
    throw std::runtime_error("solve_w_step: infeasible starting point");

  const double floor_w = params.bandwidth_floor * ctx.bandwidth;
  bool active = false;
  for (std::size_t i = 0; i < m; ++i)
    active |= u[i] > 0.0 && q_fixed[i].cwiseAbs().maxCoeff() > 1e-14;
  if (!active) {
    // objective is identically zero in W; keep the incumbent
    diag.objective = node_objective(ctx, u, w_tilde, q_fixed);
    return {w_tilde, diag};
  }

  std::vector<double> w0 = w_tilde;
  for (double& wi : w0) wi = std::max(wi, floor_w);
  AffineRateModel model = linearize_pu_rate_in_w(w0, q_fixed, ctx, floor_w);

  std::vector<RVec> eigs(m);
  for (std::size_t i = 0; i < m; ++i)
    eigs[i] = detail::clipped_eigs(hermitize(ctx.links[i].white * q_fixed[i] * ctx.links[i].white.adjoint()));

  auto fill = [&](double nu_band, double nu_rate) {
    std::vector<double> w(m);
    double sum = 0.0, rate = model.constant;
    for (std::size_t i = 0; i < m; ++i) {
      const double price = nu_band - nu_rate * model.w_coeffs[i];
      w[i] = u[i] > 0.0 ? detail::w_root(eigs[i], u[i], price, floor_w, ctx.bandwidth) : floor_w;
      sum += w[i];
      rate += model.w_coeffs[i] * w[i];
    }
    return std::make_tuple(w, sum, rate);
  };

  auto solve_band = [&](double nu_rate) {
    auto [w, sum, rate] = fill(0.0, nu_rate);
    if (sum <= ctx.bandwidth) return std::make_tuple(0.0, w, rate);
    double lo = 0.0, v_lo = sum - ctx.bandwidth;
    double hi = hints && hints->w_band > 0.0 ? hints->w_band * 0.25 : 1e-6;
    auto [wh, sh, rh] = fill(hi, nu_rate);
    int guard = 0;
    while (sh > ctx.bandwidth && guard++ < 100) {
      lo = hi;
      v_lo = sh - ctx.bandwidth;
      hi *= 4.0;
      std::tie(wh, sh, rh) = fill(hi, nu_rate);
    }
    w = wh;
    rate = rh;
    auto violation = [&](double x) {
      auto [wx, sx, rx] = fill(x, nu_rate);
      const double v = sx - ctx.bandwidth;
      if (v <= 0.0) {
        w = std::move(wx);
        rate = rx;
      }
      return v;
    };
    const double root = detail::feasible_root(violation, lo, hi, v_lo, sh - ctx.bandwidth, 1e-13);
    return std::make_tuple(root, w, rate);
  };

  const double rate_tol = 1e-11 * (1.0 + std::abs(ctx.min_rate));
  auto [nb, w, rate] = solve_band(0.0);
  double nu_rate = 0.0;
  if (rate < ctx.min_rate - rate_tol) {
    double nr_lo = 0.0, v_lo = ctx.min_rate - rate;
    double nr_hi = hints && hints->w_rate > 0.0 ? hints->w_rate * 0.25 : 1e-6;
    auto [nbh, wh, rh] = solve_band(nr_hi);
    int guard = 0;
    while (rh < ctx.min_rate && guard++ < 100) {
      nr_lo = nr_hi;
      v_lo = ctx.min_rate - rh;
      nr_hi *= 4.0;
      std::tie(nbh, wh, rh) = solve_band(nr_hi);
    }
    nb = nbh;
    w = wh;
    rate = rh;
    nu_rate = nr_hi;
    auto violation = [&](double x) {
      auto [nbx, wx, rx] = solve_band(x);
      const double v = ctx.min_rate - rx;
      if (v <= 0.0) {
        nb = nbx;
        w = std::move(wx);
        rate = rx;
        nu_rate = x;
      }
      return v;
    };
    detail::feasible_root(violation, nr_lo, nr_hi, v_lo, ctx.min_rate - rate, 1e-13);
    if (rate < ctx.min_rate - rate_tol) {
      diag.warning = true;
      diag.objective = node_objective(ctx, u, w_tilde, q_fixed);
      return {w_tilde, diag};
    }
  }
  if (hints) {
    hints->w_band = nb;
    hints->w_rate = nu_rate;
  }

  // KKT residual: clamp-projected gradient of the Lagrangian
  {
    const double h = 1e-7;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double g = -nb + nu_rate * model.w_coeffs[i];
      if (u[i] > 0.0) g += u[i] * capacity_grad_w(w[i], q_fixed[i], ctx.links[i]);
      const double p = std::max(w[i] + h * g, floor_w) - w[i];
      acc += p * p;
    }
    diag.kkt_residual = std::sqrt(acc) / h;
  }
  diag.multiplier_power = nb;
  diag.multiplier_rate = nu_rate;
  diag.converged = diag.kkt_residual <= detail::kKktTol;
  diag.warning |= !diag.converged;

  const double start_obj = node_objective(ctx, u, w_tilde, q_fixed);
  diag.objective = node_objective(ctx, u, w, q_fixed);
  if (diag.objective < start_obj) {
    diag.objective = start_obj;
    return {w_tilde, diag};
  }
  return {w, diag};
}

// Feasible, symmetric, deterministic starting point: equal bandwidth split
// and the largest PSD-scaled identity covariance that keeps the true PU
// constraint satisfied (10-step bisection on the scale).
inline NodeDecision init_node_decision(const NodeContext& ctx, const SolverParams& params) {
  (void)params;
  NodeDecision d;
  d.node_id = ctx.node_id;
  const std::size_t m = ctx.links.size();
  if (m == 0) return d;
  const int t = static_cast<int>(ctx.links[0].h.cols());
  d.bandwidth.assign(m, ctx.bandwidth / static_cast<double>(m));
  CMat base = (ctx.power_cap / (static_cast<double>(m) * t)) * CMat::Identity(t, t);
  auto scaled = [&](double c) {
    std::vector<CMat> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = c * base;
    return q;
  };
  auto feasible = [&](double c) { return pu_rate(d.bandwidth, scaled(c), ctx) >= ctx.min_rate; };
  double c = 0.0;
  if (feasible(1.0)) {
    c = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 10; ++i) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    c = lo;
  }
  d.covariance = scaled(c);
  return d;
}

// Algorithm: alternate the convex Q-step and the guarded convex W-step until
// the objective stalls. Every accepted iterate stays feasible for the true
// constraints and the objective never decreases.
inline AlternatingResult alternating_optimize(const NodeContext& ctx, const PriceVector& prices,
                                              const NodeDecision& init, const SolverParams& params,
                                              bool warm = false, bool record_iterates = false) {
  (void)warm;
  AlternatingResult res;
  res.decision = init;
  res.decision.node_id = ctx.node_id;
  const std::size_t m = ctx.links.size();
  if (m == 0) return res;
  if (init.bandwidth.size() != m || init.covariance.size() != m)
    throw std::invalid_argument("alternating_optimize: init does not match the node's outgoing links");
  if (node_violation(ctx, init.bandwidth, init.covariance) > 1e-6)
    throw std::runtime_error("alternating_optimize: infeasible initialization");

  const std::vector<double> u = node_prices(ctx, prices);
  std::vector<double> w = init.bandwidth;
  std::vector<CMat> q = init.covariance;
  double prev = node_objective(ctx, u, w, q);
  res.objective_trace.push_back(prev);
  res.converged = false;
  MultiplierHints hints;

  for (int it = 0; it < params.max_inner_iters; ++it) {
    auto [q_new, qdiag] = solve_q_step(ctx, w, q, u, params, &hints);
    q = std::move(q_new);
    auto [w_cand, wdiag] = solve_w_step(ctx, q, w, u, params, &hints);
    if (pu_rate(w_cand, q, ctx) >= ctx.min_rate - 1e-9) w = std::move(w_cand);
    res.warning |= qdiag.warning || wdiag.warning;
    res.kkt_residual = std::max(qdiag.kkt_residual, wdiag.kkt_residual);

    double obj = node_objective(ctx, u, w, q);
    if (obj < prev - 1e-9) {
      // numerical regress; keep the previous iterate and stop
      res.warning = true;
      break;
    }
    res.objective_trace.push_back(obj);
    res.decision.bandwidth = w;
    res.decision.covariance = q;
    if (record_iterates) res.iterates.push_back(res.decision);
    if (std::abs(obj - prev) <= params.inner_tol * std::max(1.0, std::abs(prev))) {
      res.converged = true;
      break;
    }
    prev = obj;
  }
  return res;
}

}  // namespace crn
