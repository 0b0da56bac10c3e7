#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crn/parallel.hpp"
#include "crn/phylink.hpp"
#include "crn/transport.hpp"

namespace crn {

// One record per dual iteration; the per-link vectors share indexing with
// Scenario::links.
struct IterationTrace {
  std::vector<Eigen::VectorXd> prices;
  std::vector<Eigen::VectorXd> subgradients;
  std::vector<Eigen::VectorXd> bandwidths;
  std::vector<Eigen::VectorXd> capacities;
  std::vector<Eigen::VectorXd> loads;
  std::vector<double> utilities;
  std::vector<double> total_powers;
  std::vector<double> dual_objectives;
  std::vector<double> max_pu_violations;

  std::size_t size() const { return prices.size(); }
};

enum class PayloadKind { price, flow, none };

struct Message {
  int iteration = 0;
  int sender = 0;
  int receiver = 0;
  PayloadKind kind = PayloadKind::none;
};

// Simulated neighbor-to-neighbor exchange; exists so the locality of the
// distributed algorithm can be asserted structurally.
struct MessageLog {
  std::vector<Message> records;
};

struct DualResult {
  IterationTrace trace;
  MessageLog messages;
  PriceVector final_prices;
  std::vector<NodeDecision> decisions;   // per node
  std::vector<SessionFlow> flows;        // per session
  std::vector<NodeContext> contexts;     // per node, reusable by callers
  bool warning = false;
};

// d_ls = Phi_ls(W, Q) - sum_f x_ls^f: positive iff the link is under-used.
inline double compute_subgradient(double capacity, const std::vector<SessionFlow>& flows, int link_id) {
  double load = 0.0;
  for (const SessionFlow& f : flows) load += f.link_flow(link_id);
  return capacity - load;
}

// u^(k+1) = [u^(k) - beta_k d^(k)]^+ with beta_k = beta0 / sqrt(k+1).
inline PriceVector update_prices(const PriceVector& prices, const Eigen::VectorXd& subgradients, int k,
                                 double beta0) {
  if (k < 0) throw std::invalid_argument("update_prices: negative iteration index");
  const double beta = beta0 / std::sqrt(static_cast<double>(k + 1));
  PriceVector next;
  next.u = (prices.u - beta * subgradients).cwiseMax(0.0);
  return next;
}

inline double session_utility(double demand, const SolverParams& p) {
  return std::log(std::max(demand, p.demand_floor));
}

namespace detail {

inline void log_round_messages(MessageLog& log, int iteration, const Scenario& s,
                               const std::vector<SessionFlow>& flows) {
  // price exchange across every link, both directions
  for (const SuLink& l : s.links) {
    log.records.push_back({iteration, l.tx, l.rx, PayloadKind::price});
    log.records.push_back({iteration, l.rx, l.tx, PayloadKind::price});
  }
  // routing decisions relayed hop by hop along each session's paths
  for (const SessionFlow& f : flows)
    for (const SessionPath& p : f.paths)
      for (int lid : p.links)
        log.records.push_back({iteration, s.links[lid].tx, s.links[lid].rx, PayloadKind::flow});
}

}  // namespace detail

// Algorithm: synchronous dual decomposition rounds. Every round solves the
// per-session transport subproblems and the per-node physical-link
// subproblems against one price snapshot, then takes a subgradient price
// step. Results are merged in index order, so traces are identical for any
// worker count.
inline DualResult run_dual_decomposition(const Scenario& s, int iters, int threads = 1) {
  if (iters < 0) throw std::invalid_argument("run_dual_decomposition: negative iteration count");
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  const int nf = static_cast<int>(s.sessions.size());
  const SolverParams& params = s.solver;

  DualResult res;
  res.contexts.reserve(nn);
  for (int i = 0; i < nn; ++i) res.contexts.push_back(make_node_context(s, i));
  res.decisions.resize(nn);
  for (int i = 0; i < nn; ++i) res.decisions[i] = init_node_decision(res.contexts[i], params);
  res.flows.resize(nf);
  res.final_prices = PriceVector::constant(nl, params.price_init);

  PriceVector u = res.final_prices;
  for (int k = 0; k < iters; ++k) {
    std::vector<SessionFlow> flows(nf);
    parallel_for(nf, threads, [&](int f) { flows[f] = solve_session(u, s.sessions[f], s, RoutingMode::single_path); });

    std::vector<AlternatingResult> solved(nn);
    parallel_for(nn, threads, [&](int i) {
      solved[i] = alternating_optimize(res.contexts[i], u, res.decisions[i], params, k > 0);
    });
    for (int i = 0; i < nn; ++i) {
      res.decisions[i] = solved[i].decision;
      res.warning |= solved[i].warning;
    }

    Eigen::VectorXd capacity = Eigen::VectorXd::Zero(nl);
    Eigen::VectorXd bandwidth = Eigen::VectorXd::Zero(nl);
    double total_power = 0.0;
    double max_pu_violation = 0.0;
    for (int i = 0; i < nn; ++i) {
      const NodeContext& ctx = res.contexts[i];
      const NodeDecision& d = res.decisions[i];
      for (std::size_t j = 0; j < ctx.links.size(); ++j) {
        capacity(ctx.link_ids[j]) = link_capacity(d.bandwidth[j], d.covariance[j], ctx.links[j]);
        bandwidth(ctx.link_ids[j]) = d.bandwidth[j];
        total_power += trace_re(d.covariance[j]);
      }
      if (!ctx.links.empty())
        max_pu_violation = std::max(max_pu_violation, ctx.min_rate - pu_rate(d.bandwidth, d.covariance, ctx));
    }

    Eigen::VectorXd load = Eigen::VectorXd::Zero(nl);
    for (const SessionFlow& f : flows) load += f.link_flow;
    Eigen::VectorXd subgrad = capacity - load;

    double utility = 0.0;
    double dual_obj = 0.0;
    for (const SessionFlow& f : flows) {
      utility += session_utility(f.demand, params);
      dual_obj += session_utility(f.demand, params) - u.u.dot(f.link_flow);
    }
    for (int i = 0; i < nn; ++i) {
      const NodeContext& ctx = res.contexts[i];
      const NodeDecision& d = res.decisions[i];
      for (std::size_t j = 0; j < ctx.links.size(); ++j)
        dual_obj += u.u(ctx.link_ids[j]) * capacity(ctx.link_ids[j]) -
                    ctx.links[j].t_weight * trace_re(d.covariance[j]);
    }

    res.trace.prices.push_back(u.u);
    res.trace.subgradients.push_back(subgrad);
    res.trace.bandwidths.push_back(bandwidth);
    res.trace.capacities.push_back(capacity);
    res.trace.loads.push_back(load);
    res.trace.utilities.push_back(utility);
    res.trace.total_powers.push_back(total_power);
    res.trace.dual_objectives.push_back(dual_obj);
    res.trace.max_pu_violations.push_back(std::max(max_pu_violation, 0.0));

    detail::log_round_messages(res.messages, k, s, flows);
    res.flows = std::move(flows);
    u = update_prices(u, subgrad, k, params.step_size_base);
  }
  res.final_prices = u;
  return res;
}

// Last-window bandwidth average of the paper's recovery heuristic:
// Wbar = (1/n) sum_{k=N-n+1..N} W^(k).
inline Eigen::VectorXd average_bandwidth(const IterationTrace& trace, int window) {
  const int n = static_cast<int>(trace.bandwidths.size());
  if (window <= 0 || window > n)
    throw std::invalid_argument("average_bandwidth: window must be in 1..trace length");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(trace.bandwidths.back().size());
  for (int k = n - window; k < n; ++k) acc += trace.bandwidths[k];
  return acc / static_cast<double>(window);
}

}  // namespace crn
