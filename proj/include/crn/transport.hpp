#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "crn/scenario.hpp"

namespace crn {

// Nonnegative link prices (the dual variables of the capacity constraints).
struct PriceVector {
  Eigen::VectorXd u;

  static PriceVector constant(int links, double value) {
    PriceVector p;
    p.u = Eigen::VectorXd::Constant(links, value);
    return p;
  }
};

struct SessionPath {
  std::vector<int> links;
  double rate = 0.0;
};

// Per-session routing decision; flow conservation holds by construction
// because link flows are sums over explicit source->destination paths.
struct SessionFlow {
  int session_id = 0;
  double demand = 0.0;              // e_f
  Eigen::VectorXd link_flow;        // x_ls^f, dense over all links
  std::vector<SessionPath> paths;
};

enum class RoutingMode {
  single_path,  // lexicographically smallest min-price path (dual iterations)
  split_ties,   // equal split over all min-price paths (primal extraction)
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::vector<double> dijkstra(const Scenario& s, int source, bool reverse,
                                    const Eigen::VectorXd& weight) {
  const int nn = static_cast<int>(s.nodes.size());
  std::vector<double> dist(nn, kInf);
  dist[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    const auto& adj = reverse ? s.nodes[v].incoming : s.nodes[v].outgoing;
    for (int lid : adj) {
      const SuLink& l = s.links[lid];
      const int to = reverse ? l.tx : l.rx;
      const double nd = d + weight(lid);
      if (nd < dist[to]) {
        dist[to] = nd;
        pq.push({nd, to});
      }
    }
  }
  return dist;
}

}  // namespace detail

// All minimum-price paths from src to dst in lexicographic link-id order,
// capped at max_paths. Only links on some optimal path survive the
// distF[tx] + w + distB[rx] == cost filter, so a DFS that always branches in
// ascending link order enumerates exactly the tied optima.
inline std::vector<std::vector<int>> min_price_paths(const Scenario& s, int src, int dst,
                                                     const Eigen::VectorXd& weight, double* cost_out,
                                                     std::size_t max_paths = 64) {
  const std::vector<double> dist_f = detail::dijkstra(s, src, false, weight);
  if (dist_f[dst] == detail::kInf)
    throw std::runtime_error("solve_session: no path from node " + std::to_string(src) + " to node " + std::to_string(dst));
  const std::vector<double> dist_b = detail::dijkstra(s, dst, true, weight);
  const double cost = dist_f[dst];
  const double tol = 1e-12 * (1.0 + std::abs(cost));
  if (cost_out) *cost_out = cost;

  std::vector<std::vector<int>> paths;
  std::vector<int> stack;
  auto dfs = [&](auto&& self, int v) -> void {
    if (paths.size() >= max_paths) return;
    if (v == dst) {
      paths.push_back(stack);
      return;
    }
    for (int lid : s.nodes[v].outgoing) {
      const SuLink& l = s.links[lid];
      if (dist_f[l.tx] + weight(lid) + dist_b[l.rx] <= cost + tol) {
        stack.push_back(lid);
        self(self, l.rx);
        stack.pop_back();
        if (paths.size() >= max_paths) return;
      }
    }
  };
  dfs(dfs, src);
  return paths;
}

// Network-transport subproblem for one session: maximize
// U_f(e) - sum_ls u_ls x_ls^f over conserved nonnegative flows. With ln
// utility the optimum routes everything over a min-price path and sets
// e = 1 / (path cost), capped at e_max.
inline SessionFlow solve_session(const PriceVector& prices, const Session& session, const Scenario& s,
                                 RoutingMode mode = RoutingMode::single_path) {
  const int nl = static_cast<int>(s.links.size());
  if (prices.u.size() != nl) throw std::invalid_argument("solve_session: price vector size mismatch");
  if (prices.u.minCoeff() < 0.0) throw std::invalid_argument("solve_session: negative price");
  Eigen::VectorXd weight = prices.u.cwiseMax(s.solver.price_floor);

  double cost = 0.0;
  std::vector<std::vector<int>> paths =
      min_price_paths(s, session.src, session.dst, weight, &cost, mode == RoutingMode::single_path ? 1 : 64);

  SessionFlow flow;
  flow.session_id = session.id;
  flow.demand = std::min(1.0 / cost, s.solver.demand_cap);
  flow.link_flow = Eigen::VectorXd::Zero(nl);
  const double per_path = flow.demand / static_cast<double>(paths.size());
  for (const auto& p : paths) {
    SessionPath sp;
    sp.links = p;
    sp.rate = per_path;
    for (int lid : p) flow.link_flow(lid) += per_path;
    flow.paths.push_back(std::move(sp));
  }
  return flow;
}

// Signed conservation residual of one session at one node:
// sum(out) - sum(in) - a_ns e_f with a = +1 at src, -1 at dst, 0 elsewhere.
inline double flow_conservation_residual(const SessionFlow& flow, const Session& session, const Scenario& s,
                                         int node_id) {
  double acc = 0.0;
  for (int lid : s.nodes[node_id].outgoing) acc += flow.link_flow(lid);
  for (int lid : s.nodes[node_id].incoming) acc -= flow.link_flow(lid);
  if (node_id == session.src) acc -= flow.demand;
  if (node_id == session.dst) acc += flow.demand;
  return acc;
}

}  // namespace crn
