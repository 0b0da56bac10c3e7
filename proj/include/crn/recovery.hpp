#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crn/dual.hpp"

namespace crn {

// Primal-feasible point of the whole cross-layer problem.
struct FeasibleSolution {
  std::vector<NodeDecision> decisions;  // per node, W fixed at Wbar
  std::vector<SessionFlow> flows;       // per session
  PriceVector prices;
  double utility = 0.0;      // sum_f ln(max(e_f, e_min))
  double total_power = 0.0;  // sum_ls Tr(Q_ls)
};

struct RecoveryResult {
  FeasibleSolution solution;
  std::vector<double> outer_utilities;  // achieved utility per outer iteration
  bool warning = false;
};

// Worst violation per constraint family, with the offending entity.
struct FeasibilityReport {
  double power_violation = 0.0;
  double bandwidth_violation = 0.0;
  double pu_violation = 0.0;
  double flow_violation = 0.0;
  double capacity_violation = 0.0;
  int worst_power_node = -1;
  int worst_bandwidth_node = -1;
  int worst_pu_node = -1;
  int worst_flow_node = -1;
  int worst_capacity_link = -1;
  bool feasible = false;

  double max_violation() const {
    return std::max({power_violation, bandwidth_violation, pu_violation, flow_violation, capacity_violation});
  }
};

constexpr double kFeasibilityTol = 1e-6;

// Audits every constraint of the joint problem: power and bandwidth budgets,
// true PU rates, flow conservation, link loads against capacities.
inline FeasibilityReport verify_feasibility(const FeasibleSolution& sol, const Scenario& s) {
  FeasibilityReport rep;
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  std::vector<NodeContext> ctx;
  ctx.reserve(nn);
  for (int i = 0; i < nn; ++i) ctx.push_back(make_node_context(s, i));

  Eigen::VectorXd capacity = Eigen::VectorXd::Zero(nl);
  for (int i = 0; i < nn; ++i) {
    const NodeDecision& d = sol.decisions.at(i);
    double wsum = 0.0, psum = 0.0, neg = 0.0;
    for (std::size_t j = 0; j < ctx[i].links.size(); ++j) {
      wsum += d.bandwidth[j];
      psum += trace_re(d.covariance[j]);
      capacity(ctx[i].link_ids[j]) = link_capacity(d.bandwidth[j], d.covariance[j], ctx[i].links[j]);
      neg = std::max(neg, -min_eigenvalue(d.covariance[j]));
    }
    if (neg > rep.power_violation) {
      rep.power_violation = neg;
      rep.worst_power_node = i;
    }
    if (psum - ctx[i].power_cap > rep.power_violation) {
      rep.power_violation = psum - ctx[i].power_cap;
      rep.worst_power_node = i;
    }
    if (wsum - ctx[i].bandwidth > rep.bandwidth_violation) {
      rep.bandwidth_violation = wsum - ctx[i].bandwidth;
      rep.worst_bandwidth_node = i;
    }
    if (!ctx[i].links.empty()) {
      // past the PU band edge or off the PSD cone the rate is undefined;
      // the violations recorded above already witness infeasibility there
      if (wsum > ctx[i].pu_bandwidth * (1.0 + 1e-9)) {
        if (wsum - ctx[i].pu_bandwidth > rep.bandwidth_violation) {
          rep.bandwidth_violation = wsum - ctx[i].pu_bandwidth;
          rep.worst_bandwidth_node = i;
        }
      } else if (neg <= 1e-8) {
        const double v = ctx[i].min_rate - pu_rate(d.bandwidth, d.covariance, ctx[i]);
        if (v > rep.pu_violation) {
          rep.pu_violation = v;
          rep.worst_pu_node = i;
        }
      }
    }
  }

  Eigen::VectorXd load = Eigen::VectorXd::Zero(nl);
  for (const SessionFlow& f : sol.flows) {
    load += f.link_flow;
    const double neg = f.link_flow.size() ? -f.link_flow.minCoeff() : 0.0;
    if (std::max(neg, -f.demand) > rep.flow_violation) rep.flow_violation = std::max(neg, -f.demand);
    for (int v = 0; v < nn; ++v) {
      const double r = std::abs(flow_conservation_residual(f, s.sessions.at(f.session_id), s, v));
      if (r > rep.flow_violation) {
        rep.flow_violation = r;
        rep.worst_flow_node = v;
      }
    }
  }
  for (int l = 0; l < nl; ++l)
    if (load(l) - capacity(l) > rep.capacity_violation) {
      rep.capacity_violation = load(l) - capacity(l);
      rep.worst_capacity_link = l;
    }

  rep.feasible = rep.max_violation() <= kFeasibilityTol;
  return rep;
}

namespace detail {

// Per-path clipping that turns a near-feasible flow set into a strictly
// feasible one: scale every path by the worst capacity headroom along it,
// using pre-clip loads, so post-clip loads never exceed capacity.
inline void clip_flows_to_capacity(std::vector<SessionFlow>& flows, const Eigen::VectorXd& capacity) {
  const int nl = static_cast<int>(capacity.size());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(nl);
  for (const SessionFlow& f : flows) load += f.link_flow;
  for (SessionFlow& f : flows) {
    f.link_flow = Eigen::VectorXd::Zero(nl);
    double demand = 0.0;
    for (SessionPath& p : f.paths) {
      double scale = 1.0 - 1e-12;
      for (int lid : p.links) {
        if (load(lid) <= 0.0) continue;
        scale = std::min(scale, capacity(lid) > 0.0 ? (1.0 - 1e-12) * capacity(lid) / load(lid) : 0.0);
      }
      scale = std::max(scale, 0.0);
      p.rate *= std::min(scale, 1.0);
      for (int lid : p.links) f.link_flow(lid) += p.rate;
      demand += p.rate;
    }
    f.demand = demand;
  }
}

}  // namespace detail

// Algorithm: primal recovery. Bandwidths stay fixed at Wbar; an outer CCCP
// loop re-linearizes the PU rate at the current covariances while an inner
// dual-decomposition loop solves the resulting convex problem. The extracted
// flows are clipped to capacities, so the returned solution is feasible.
inline RecoveryResult recover_primal(const Scenario& s, const Eigen::VectorXd& w_bar,
                                     const std::vector<NodeDecision>& q_init, const PriceVector& u_init,
                                     int threads = 1, const std::vector<NodeContext>* contexts = nullptr) {
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  const int nf = static_cast<int>(s.sessions.size());
  const SolverParams& params = s.solver;
  if (w_bar.size() != nl) throw std::invalid_argument("recover_primal: bandwidth vector size mismatch");

  std::vector<NodeContext> own;
  if (!contexts) {
    own.reserve(nn);
    for (int i = 0; i < nn; ++i) own.push_back(make_node_context(s, i));
    contexts = &own;
  }
  const std::vector<NodeContext>& ctx = *contexts;

  // split Wbar per node and restore true PU feasibility by shrinking the
  // initial covariances where the averaged bandwidths broke it
  std::vector<std::vector<double>> w(nn);
  std::vector<std::vector<CMat>> q(nn);
  for (int i = 0; i < nn; ++i) {
    const std::size_t m = ctx[i].links.size();
    w[i].resize(m);
    double wsum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      w[i][j] = w_bar(ctx[i].link_ids[j]);
      if (w[i][j] < 0.0) throw std::invalid_argument("recover_primal: negative averaged bandwidth");
      wsum += w[i][j];
    }
    if (wsum > ctx[i].bandwidth * (1.0 + 1e-9))
      throw std::invalid_argument("recover_primal: averaged bandwidths exceed the node budget");
    q[i] = q_init.at(i).covariance;
    if (q[i].size() != m) throw std::invalid_argument("recover_primal: q_init does not match node links");
    if (m > 0 && pu_rate(w[i], q[i], ctx[i]) < ctx[i].min_rate) {
      double lo = 0.0, hi = 1.0;
      for (int b = 0; b < 30; ++b) {
        const double mid = 0.5 * (lo + hi);
        std::vector<CMat> cand(m);
        for (std::size_t j = 0; j < m; ++j) cand[j] = mid * q_init[i].covariance[j];
        (pu_rate(w[i], cand, ctx[i]) >= ctx[i].min_rate ? lo : hi) = mid;
      }
      for (std::size_t j = 0; j < m; ++j) q[i][j] = lo * q_init[i].covariance[j];
    }
  }

  RecoveryResult res;
  PriceVector u = u_init;
  double best_utility = -std::numeric_limits<double>::infinity();

  // Extraction: split ties equally at the given prices, then clip per path
  // so loads never exceed the capacities of the given covariances. The best
  // extraction across inner snapshots is kept, since a single late snapshot
  // can catch the subgradient iteration mid-oscillation.
  auto extract = [&](const PriceVector& prices) {
    Eigen::VectorXd capacity = Eigen::VectorXd::Zero(nl);
    for (int i = 0; i < nn; ++i)
      for (std::size_t j = 0; j < ctx[i].links.size(); ++j)
        capacity(ctx[i].link_ids[j]) = link_capacity(w[i][j], q[i][j], ctx[i].links[j]);
    std::vector<SessionFlow> extracted(nf);
    parallel_for(nf, threads,
                 [&](int f) { extracted[f] = solve_session(prices, s.sessions[f], s, RoutingMode::split_ties); });
    detail::clip_flows_to_capacity(extracted, capacity);
    double utility = 0.0;
    for (const SessionFlow& f : extracted) utility += session_utility(f.demand, params);
    if (utility > best_utility) {
      best_utility = utility;
      res.solution.flows = std::move(extracted);
      res.solution.prices = prices;
      res.solution.decisions.assign(nn, NodeDecision{});
      res.solution.total_power = 0.0;
      for (int i = 0; i < nn; ++i) {
        res.solution.decisions[i].node_id = i;
        res.solution.decisions[i].bandwidth = w[i];
        res.solution.decisions[i].covariance = q[i];
        for (const CMat& qi : q[i]) res.solution.total_power += trace_re(qi);
      }
      res.solution.utility = utility;
    }
  };

  for (int outer = 0; outer < params.recovery_outer_iters; ++outer) {
    // CCCP step: freeze the linearization at the current covariances
    std::vector<AffineRateModel> models(nn);
    for (int i = 0; i < nn; ++i)
      if (!ctx[i].links.empty()) models[i] = linearize_pu_rate_in_q(q[i], w[i], ctx[i]);

    std::vector<SessionFlow> flows(nf);
    std::vector<MultiplierHints> hints(nn);
    for (int k = 0; k < params.recovery_dual_iters; ++k) {
      parallel_for(nf, threads, [&](int f) { flows[f] = solve_session(u, s.sessions[f], s, RoutingMode::single_path); });
      std::vector<std::vector<CMat>> q_next(nn);
      parallel_for(nn, threads, [&](int i) {
        if (ctx[i].links.empty()) return;
        auto [qi, diag] = solve_q_step_with_model(ctx[i], w[i], q[i], node_prices(ctx[i], u), models[i], params, &hints[i]);
        q_next[i] = std::move(qi);
      });
      for (int i = 0; i < nn; ++i)
        if (!ctx[i].links.empty()) q[i] = std::move(q_next[i]);

      Eigen::VectorXd capacity = Eigen::VectorXd::Zero(nl);
      for (int i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < ctx[i].links.size(); ++j)
          capacity(ctx[i].link_ids[j]) = link_capacity(w[i][j], q[i][j], ctx[i].links[j]);
      Eigen::VectorXd load = Eigen::VectorXd::Zero(nl);
      for (const SessionFlow& f : flows) load += f.link_flow;
      u = update_prices(u, capacity - load, k, params.step_size_base);
      if ((k + 1) % 10 == 0 || k + 1 == params.recovery_dual_iters) extract(u);
    }
    res.outer_utilities.push_back(best_utility);

    if (outer > 0) {
      const double prevu = res.outer_utilities[outer - 1];
      if (std::abs(best_utility - prevu) <= params.outer_tol * std::max(1.0, std::abs(prevu))) break;
    }
  }
  return res;
}

// Full distributed pipeline: Algorithm 1 for N rounds, bandwidth averaging
// over the last n rounds, then primal recovery.
inline RecoveryResult run_full_pipeline(const Scenario& s, int threads = 1, DualResult* dual_out = nullptr) {
  DualResult dual = run_dual_decomposition(s, s.solver.dual_iters, threads);
  Eigen::VectorXd w_bar = average_bandwidth(dual.trace, s.solver.averaging_window);
  RecoveryResult rec = recover_primal(s, w_bar, dual.decisions, dual.final_prices, threads, &dual.contexts);
  rec.warning |= dual.warning;
  if (dual_out) *dual_out = std::move(dual);
  return rec;
}

}  // namespace crn
