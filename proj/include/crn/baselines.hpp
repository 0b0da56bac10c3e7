#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crn/recovery.hpp"

namespace crn {

// Simple src->dst paths in (hop count, lexicographic link id) order.
inline std::vector<std::vector<int>> enumerate_paths(const Scenario& s, int src, int dst,
                                                     std::size_t max_paths = 64, int extra_depth = 4) {
  const int nn = static_cast<int>(s.nodes.size());
  // shortest hop count first
  std::vector<int> hops(nn, -1);
  std::queue<int> bfs;
  bfs.push(src);
  hops[src] = 0;
  while (!bfs.empty()) {
    int v = bfs.front();
    bfs.pop();
    for (int lid : s.nodes[v].outgoing) {
      int to = s.links[lid].rx;
      if (hops[to] < 0) {
        hops[to] = hops[v] + 1;
        bfs.push(to);
      }
    }
  }
  if (hops[dst] < 0) throw std::runtime_error("enumerate_paths: destination unreachable");

  std::vector<std::vector<int>> paths;
  std::vector<char> visited(nn, 0);
  std::vector<int> stack;
  auto dfs = [&](auto&& self, int v, int depth_left) -> void {
    if (paths.size() >= max_paths) return;
    if (v == dst) {
      if (depth_left == 0) paths.push_back(stack);
      return;
    }
    if (depth_left == 0) return;
    visited[v] = 1;
    for (int lid : s.nodes[v].outgoing) {
      int to = s.links[lid].rx;
      if (visited[to]) continue;
      stack.push_back(lid);
      self(self, to, depth_left - 1);
      stack.pop_back();
      if (paths.size() >= max_paths) break;
    }
    visited[v] = 0;
  };
  const int max_depth = std::min(hops[dst] + extra_depth, nn - 1);
  for (int d = hops[dst]; d <= max_depth && paths.size() < max_paths; ++d) dfs(dfs, src, d);
  return paths;
}

namespace detail {

struct CentralState {
  std::vector<std::vector<double>> w;   // per node, per outgoing link
  std::vector<std::vector<CMat>> q;     // per node, per outgoing link
  std::vector<std::vector<double>> y;   // per session, per enumerated path
};

inline CentralState interpolate(const CentralState& a, const CentralState& b, double theta) {
  CentralState s = a;
  for (std::size_t i = 0; i < a.w.size(); ++i)
    for (std::size_t j = 0; j < a.w[i].size(); ++j) {
      s.w[i][j] = (1.0 - theta) * a.w[i][j] + theta * b.w[i][j];
      s.q[i][j] = (1.0 - theta) * a.q[i][j] + theta * b.q[i][j];
    }
  for (std::size_t f = 0; f < a.y.size(); ++f)
    for (std::size_t p = 0; p < a.y[f].size(); ++p) s.y[f][p] = (1.0 - theta) * a.y[f][p] + theta * b.y[f][p];
  return s;
}

// The convexified joint problem at one CCCP expansion point, solved by the
// same barrier + projected-gradient machinery as the per-node subproblems.
struct CentralProblem {
  const Scenario* s;
  const std::vector<NodeContext>* ctx;
  const std::vector<std::vector<std::vector<int>>>* paths;  // per session
  std::vector<AffineRateModel> models;  // per node, joint (W, Q) tangent
  std::vector<char> link_active;
  std::vector<double> floor_w;  // per node

  double demand(const CentralState& st, int f) const {
    double e = 0.0;
    for (double yp : st.y[f]) e += yp;
    return e;
  }

  double plain(const CentralState& st) const {
    double acc = 0.0;
    for (std::size_t f = 0; f < st.y.size(); ++f) acc += std::log(std::max(demand(st, f), s->solver.demand_floor));
    for (std::size_t i = 0; i < st.q.size(); ++i)
      for (std::size_t j = 0; j < st.q[i].size(); ++j)
        acc -= (*ctx)[i].links[j].t_weight * trace_re(st.q[i][j]);
    return acc;
  }

  // slack vectors; false if any is non-positive (outside the barrier domain)
  bool slacks(const CentralState& st, std::vector<double>* node_bw, std::vector<double>* node_pw,
              std::vector<double>* node_rate, Eigen::VectorXd* cap_slack, std::vector<double>* sess_cap,
              Eigen::VectorXd* capacity) const {
    const int nn = static_cast<int>(ctx->size());
    const int nl = static_cast<int>(s->links.size());
    node_bw->assign(nn, 0.0);
    node_pw->assign(nn, 0.0);
    node_rate->assign(nn, 0.0);
    *capacity = Eigen::VectorXd::Zero(nl);
    Eigen::VectorXd load = Eigen::VectorXd::Zero(nl);
    for (int i = 0; i < nn; ++i) {
      const NodeContext& c = (*ctx)[i];
      double ws = 0.0, ps = 0.0;
      for (std::size_t j = 0; j < c.links.size(); ++j) {
        ws += st.w[i][j];
        ps += trace_re(st.q[i][j]);
        (*capacity)(c.link_ids[j]) = link_capacity(st.w[i][j], st.q[i][j], c.links[j]);
      }
      (*node_bw)[i] = c.bandwidth - ws;
      (*node_pw)[i] = c.power_cap - ps;
      (*node_rate)[i] = c.links.empty() ? 1.0 : models[i].value(st.w[i], st.q[i]) - c.min_rate;
      if ((*node_bw)[i] <= 0.0 || (*node_pw)[i] <= 0.0 || (*node_rate)[i] <= 0.0) return false;
    }
    sess_cap->assign(st.y.size(), 0.0);
    for (std::size_t f = 0; f < st.y.size(); ++f) {
      const double e = demand(st, f);
      if (e <= 0.0) return false;
      (*sess_cap)[f] = s->solver.demand_cap - e;
      if ((*sess_cap)[f] <= 0.0) return false;
      for (std::size_t p = 0; p < st.y[f].size(); ++p)
        for (int lid : (*paths)[f][p]) load(lid) += st.y[f][p];
    }
    *cap_slack = *capacity - load;
    for (int l = 0; l < nl; ++l)
      if (link_active[l] && (*cap_slack)(l) <= 0.0) return false;
    return true;
  }

  double barrier(const CentralState& st, double mu, bool* ok) const {
    std::vector<double> nb, np, nr, sc;
    Eigen::VectorXd cs, cap;
    if (!slacks(st, &nb, &np, &nr, &cs, &sc, &cap)) {
      *ok = false;
      return -std::numeric_limits<double>::infinity();
    }
    *ok = true;
    double acc = plain(st);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if ((*ctx)[i].links.empty()) continue;
      acc += mu * (std::log(nb[i]) + std::log(np[i]) + std::log(nr[i]));
    }
    for (int l = 0; l < cs.size(); ++l)
      if (link_active[l]) acc += mu * std::log(cs(l));
    for (double v : sc) acc += mu * std::log(v);
    return acc;
  }
};

inline void central_gradient(const CentralProblem& f, const CentralState& st, double mu, CentralState* grad) {
  const Scenario& s = *f.s;
  const int nn = static_cast<int>(f.ctx->size());
  std::vector<double> nb, np, nr, sc;
  Eigen::VectorXd cs, cap;
  f.slacks(st, &nb, &np, &nr, &cs, &sc, &cap);

  grad->w.assign(nn, {});
  grad->q.assign(nn, {});
  grad->y.assign(st.y.size(), {});
  for (int i = 0; i < nn; ++i) {
    const NodeContext& c = (*f.ctx)[i];
    const std::size_t m = c.links.size();
    grad->w[i].assign(m, 0.0);
    grad->q[i].assign(m, CMat());
    for (std::size_t j = 0; j < m; ++j) {
      const int lid = c.link_ids[j];
      const int t = static_cast<int>(c.links[j].h.cols());
      double gw = -mu / nb[i] + mu * f.models[i].w_coeffs[j] / nr[i];
      CMat gq = -(c.links[j].t_weight + mu / np[i]) * CMat::Identity(t, t);
      if (f.models[i].q_coeffs[j].size() != 0) gq += (mu / nr[i]) * f.models[i].q_coeffs[j];
      if (f.link_active[lid]) {
        gw += mu / cs(lid) * capacity_grad_w(st.w[i][j], st.q[i][j], c.links[j]);
        gq += mu / cs(lid) * capacity_grad_q(st.w[i][j], st.q[i][j], c.links[j]);
      }
      grad->w[i][j] = gw;
      grad->q[i][j] = hermitize(gq);
    }
  }
  for (std::size_t fi = 0; fi < st.y.size(); ++fi) {
    const double e = f.demand(st, fi);
    grad->y[fi].assign(st.y[fi].size(), 0.0);
    for (std::size_t p = 0; p < st.y[fi].size(); ++p) {
      double g = 1.0 / std::max(e, s.solver.demand_floor) - mu / sc[fi];
      for (int lid : (*f.paths)[fi][p]) g -= mu / cs(lid);
      grad->y[fi][p] = g;
    }
  }
}

inline CentralState central_project(const CentralProblem& f, const CentralState& st, const CentralState& g,
                                    double step) {
  CentralState out = st;
  for (std::size_t i = 0; i < st.w.size(); ++i)
    for (std::size_t j = 0; j < st.w[i].size(); ++j) {
      out.w[i][j] = std::max(st.w[i][j] + step * g.w[i][j], f.floor_w[i]);
      out.q[i][j] = psd_project(st.q[i][j] + step * g.q[i][j]);
    }
  for (std::size_t fi = 0; fi < st.y.size(); ++fi)
    for (std::size_t p = 0; p < st.y[fi].size(); ++p)
      out.y[fi][p] = std::max(st.y[fi][p] + step * g.y[fi][p], 0.0);
  return out;
}

inline double central_inner(const CentralState& a, const CentralState& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.w.size(); ++i)
    for (std::size_t j = 0; j < a.w[i].size(); ++j) {
      acc += a.w[i][j] * b.w[i][j];
      acc += re_trace_prod(a.q[i][j], b.q[i][j]);
    }
  for (std::size_t f = 0; f < a.y.size(); ++f)
    for (std::size_t p = 0; p < a.y[f].size(); ++p) acc += a.y[f][p] * b.y[f][p];
  return acc;
}

inline CentralState central_diff(const CentralState& a, const CentralState& b) {
  CentralState d = a;
  for (std::size_t i = 0; i < a.w.size(); ++i)
    for (std::size_t j = 0; j < a.w[i].size(); ++j) {
      d.w[i][j] = a.w[i][j] - b.w[i][j];
      d.q[i][j] = a.q[i][j] - b.q[i][j];
    }
  for (std::size_t f = 0; f < a.y.size(); ++f)
    for (std::size_t p = 0; p < a.y[f].size(); ++p) d.y[f][p] = a.y[f][p] - b.y[f][p];
  return d;
}

inline void central_barrier_solve(const CentralProblem& f, CentralState& st, const SolverParams& params) {
  double step = 1.0;
  const int stages = barrier_stage_count(params.barrier_init, params.barrier_decrease);
  double mu = params.barrier_init;
  for (int stage = 0; stage < stages; ++stage, mu /= params.barrier_decrease) {
    const int iters = stage + 1 == stages ? 1200 : 250;
    bool ok = false;
    double fval = f.barrier(st, mu, &ok);
    int stall = 0;
    for (int it = 0; it < iters; ++it) {
      CentralState g;
      central_gradient(f, st, mu, &g);
      bool accepted = false;
      for (int bt = 0; bt < 45 && !accepted; ++bt) {
        CentralState cand = central_project(f, st, g, step);
        bool cand_ok = false;
        const double cand_val = f.barrier(cand, mu, &cand_ok);
        const double descent = central_inner(g, central_diff(cand, st));
        if (cand_ok && cand_val >= fval + 1e-4 * descent && descent >= 0.0) {
          const double df = cand_val - fval;
          st = std::move(cand);
          fval = cand_val;
          step = std::min(step * 1.3, 1e8);
          accepted = true;
          stall = std::abs(df) <= 1e-12 * (1.0 + std::abs(fval)) ? stall + 1 : 0;
        } else {
          step *= 0.5;
        }
      }
      if (!accepted || stall >= 3) break;
    }
  }
}

inline bool central_true_pu_feasible(const std::vector<NodeContext>& ctx, const CentralState& st, double tol) {
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (ctx[i].links.empty()) continue;
    if (pu_rate(st.w[i], st.q[i], ctx[i]) < ctx[i].min_rate - tol) return false;
  }
  return true;
}

}  // namespace detail

// Centralized benchmark: monolithic CCCP over all variables. Each outer
// iteration linearizes every PU-rate constraint jointly in (W, Q) and solves
// the resulting convex program over covariances, bandwidths and path flows;
// a segment backtrack keeps the iterates feasible for the true PU rates.
// Multi-start keeps the best audited solution.
inline FeasibleSolution centralized_solve(const Scenario& s, int restarts = 5, int threads = 1) {
  if (restarts < 1) throw std::invalid_argument("centralized_solve: restarts must be >= 1");
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  const int nf = static_cast<int>(s.sessions.size());
  const SolverParams& params = s.solver;

  std::vector<NodeContext> ctx;
  ctx.reserve(nn);
  for (int i = 0; i < nn; ++i) ctx.push_back(make_node_context(s, i));
  std::vector<std::vector<std::vector<int>>> paths(nf);
  for (int f = 0; f < nf; ++f) paths[f] = enumerate_paths(s, s.sessions[f].src, s.sessions[f].dst);
  std::vector<char> link_active(nl, 0);
  for (const auto& sp : paths)
    for (const auto& p : sp)
      for (int lid : p) link_active[lid] = 1;

  std::vector<FeasibleSolution> best(restarts);
  std::vector<double> best_utility(restarts, -std::numeric_limits<double>::infinity());

  parallel_for(restarts, threads, [&](int restart) {
    // feasible start; restart 0 is the deterministic symmetric one
    detail::CentralState st;
    st.w.assign(nn, {});
    st.q.assign(nn, {});
    for (int i = 0; i < nn; ++i) {
      const std::size_t m = ctx[i].links.size();
      if (m == 0) continue;
      const int t = static_cast<int>(ctx[i].links[0].h.cols());
      st.w[i].assign(m, (1.0 - 1e-3) * ctx[i].bandwidth / static_cast<double>(m));
      std::vector<CMat> dirs(m);
      for (std::size_t j = 0; j < m; ++j) {
        if (restart == 0) {
          dirs[j] = CMat::Identity(t, t);
        } else {
          Rng rng(mix_seed(s.seed, 0x90 + restart, ctx[i].link_ids[j]));
          CMat g(t, t);
          for (int r = 0; r < t; ++r)
            for (int c = 0; c < t; ++c) g(r, c) = rng.cnormal();
          dirs[j] = g * g.adjoint() + 1e-3 * CMat::Identity(t, t);
        }
        dirs[j] *= (1.0 - 1e-3) * ctx[i].power_cap / (static_cast<double>(m) * trace_re(dirs[j]));
      }
      auto scaled = [&](double c) {
        std::vector<CMat> q(m);
        for (std::size_t j = 0; j < m; ++j) q[j] = c * dirs[j];
        return q;
      };
      double lo = 0.0, hi = 1.0;
      if (pu_rate(st.w[i], scaled(1.0), ctx[i]) >= ctx[i].min_rate) {
        lo = 1.0;
      } else {
        for (int b = 0; b < 20; ++b) {
          const double mid = 0.5 * (lo + hi);
          (pu_rate(st.w[i], scaled(mid), ctx[i]) >= ctx[i].min_rate ? lo : hi) = mid;
        }
        lo *= 0.95;  // strict margin for the barrier
      }
      st.q[i] = scaled(lo);
    }
    st.y.assign(nf, {});
    for (int f = 0; f < nf; ++f) st.y[f].assign(paths[f].size(), 0.0);
    // tiny positive flow along each session's first path with capacity
    {
      Eigen::VectorXd cap = Eigen::VectorXd::Zero(nl);
      for (int i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < ctx[i].links.size(); ++j)
          cap(ctx[i].link_ids[j]) = link_capacity(st.w[i][j], st.q[i][j], ctx[i].links[j]);
      for (int f = 0; f < nf; ++f)
        for (std::size_t p = 0; p < paths[f].size(); ++p) {
          double headroom = std::numeric_limits<double>::infinity();
          for (int lid : paths[f][p]) headroom = std::min(headroom, cap(lid));
          if (headroom > 0.0) {
            st.y[f][p] = 1e-6 * headroom;
            break;
          }
        }
    }

    detail::CentralProblem prob;
    prob.s = &s;
    prob.ctx = &ctx;
    prob.paths = &paths;
    prob.link_active = link_active;
    prob.floor_w.resize(nn);
    for (int i = 0; i < nn; ++i) prob.floor_w[i] = params.bandwidth_floor * ctx[i].bandwidth;
    prob.models.resize(nn);

    double prev_obj = -std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 10; ++outer) {
      for (int i = 0; i < nn; ++i)
        if (!ctx[i].links.empty())
          prob.models[i] = linearize_pu_rate_joint(st.w[i], st.q[i], ctx[i], prob.floor_w[i] * 0.5);
      detail::CentralState cand = st;
      detail::central_barrier_solve(prob, cand, params);
      // the joint tangent is not certified one-sided in W; walk back along
      // the segment to the previous iterate until the true rates hold
      double theta = 1.0;
      detail::CentralState accepted = cand;
      for (int b = 0; b < 24; ++b) {
        accepted = theta == 1.0 ? cand : detail::interpolate(st, cand, theta);
        if (detail::central_true_pu_feasible(ctx, accepted, 1e-9)) break;
        theta *= 0.5;
        if (b == 23) accepted = st;
      }
      const double obj = prob.plain(accepted);
      if (obj < prev_obj) break;
      st = accepted;
      if (std::abs(obj - prev_obj) <= params.outer_tol * std::max(1.0, std::abs(prev_obj))) {
        prev_obj = obj;
        break;
      }
      prev_obj = obj;
    }

    // extraction: decisions + path flows, clipped to capacities
    FeasibleSolution sol;
    sol.decisions.assign(nn, NodeDecision{});
    Eigen::VectorXd cap = Eigen::VectorXd::Zero(nl);
    for (int i = 0; i < nn; ++i) {
      sol.decisions[i].node_id = i;
      sol.decisions[i].bandwidth = st.w[i];
      sol.decisions[i].covariance = st.q[i];
      for (std::size_t j = 0; j < ctx[i].links.size(); ++j) {
        cap(ctx[i].link_ids[j]) = link_capacity(st.w[i][j], st.q[i][j], ctx[i].links[j]);
        sol.total_power += trace_re(st.q[i][j]);
      }
    }
    sol.flows.assign(nf, SessionFlow{});
    for (int f = 0; f < nf; ++f) {
      sol.flows[f].session_id = f;
      sol.flows[f].link_flow = Eigen::VectorXd::Zero(nl);
      for (std::size_t p = 0; p < paths[f].size(); ++p) {
        if (st.y[f][p] <= 0.0) continue;
        SessionPath sp;
        sp.links = paths[f][p];
        sp.rate = st.y[f][p];
        for (int lid : sp.links) sol.flows[f].link_flow(lid) += sp.rate;
        sol.flows[f].paths.push_back(std::move(sp));
      }
      sol.flows[f].demand = prob.demand(st, f);
    }
    detail::clip_flows_to_capacity(sol.flows, cap);
    sol.prices = PriceVector::constant(nl, 0.0);
    sol.utility = 0.0;
    for (const SessionFlow& fl : sol.flows) sol.utility += session_utility(fl.demand, params);

    FeasibilityReport rep = verify_feasibility(sol, s);
    if (rep.feasible) {
      best[restart] = sol;
      best_utility[restart] = sol.utility;
    }
  });

  int pick = -1;
  for (int r = 0; r < restarts; ++r)
    if (pick < 0 || best_utility[r] > best_utility[pick]) pick = r;
  if (pick < 0 || best_utility[pick] == -std::numeric_limits<double>::infinity())
    throw std::runtime_error("centralized_solve: no restart produced a feasible solution");
  return best[pick];
}

// Equal-bandwidth benchmark: W_ls = B_ns / |O(n_s)| for every node, then the
// standard primal recovery on top.
inline FeasibleSolution equal_bandwidth_baseline(const Scenario& s, int threads = 1) {
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  std::vector<NodeContext> ctx;
  ctx.reserve(nn);
  for (int i = 0; i < nn; ++i) ctx.push_back(make_node_context(s, i));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nl);
  std::vector<NodeDecision> q_init(nn);
  for (int i = 0; i < nn; ++i) {
    q_init[i] = init_node_decision(ctx[i], s.solver);
    for (std::size_t j = 0; j < ctx[i].links.size(); ++j) w(ctx[i].link_ids[j]) = q_init[i].bandwidth[j];
  }
  PriceVector u = PriceVector::constant(nl, s.solver.price_init);
  return recover_primal(s, w, q_init, u, threads, &ctx).solution;
}

struct SweepRow {
  double alpha = 0.0;
  double t_weight = 0.0;
  std::uint64_t seed = 0;
  double utility = 0.0;
  double total_power = 0.0;
  double pu_violation_max = 0.0;
  double runtime_s = 0.0;
};

struct SweepFailure {
  double alpha = 0.0;
  double t_weight = 0.0;
  std::uint64_t seed = 0;
  std::string reason;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
};

// Full pipeline per (alpha, t, seed) grid cell; failed cells are recorded
// with a reason instead of aborting the sweep.
inline SweepTable sweep_utility_power(const Scenario& base, const std::vector<double>& alpha_grid,
                                      const std::vector<double>& t_grid,
                                      const std::vector<std::uint64_t>& seeds, int threads = 1) {
  if (alpha_grid.empty() || t_grid.empty() || seeds.empty())
    throw std::invalid_argument("sweep_utility_power: empty grid");
  SweepTable table;
  for (double alpha : alpha_grid)
    for (double t : t_grid)
      for (std::uint64_t seed : seeds) {
        try {
          Scenario sc = base;
          for (SuNode& n : sc.nodes) n.power_fraction = alpha;
          for (SuLink& l : sc.links) l.t_weight = t;
          sc.seed = seed;
          Scenario gen = generate_channels(sc, seed);
          const auto start = std::chrono::steady_clock::now();
          RecoveryResult rec = run_full_pipeline(gen, threads);
          const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          FeasibilityReport rep = verify_feasibility(rec.solution, gen);
          if (!rep.feasible) {
            table.failures.push_back({alpha, t, seed, "solution failed the feasibility audit"});
            continue;
          }
          table.rows.push_back({alpha, t, seed, rec.solution.utility, rec.solution.total_power,
                                std::max(rep.pu_violation, 0.0), elapsed});
        } catch (const std::exception& e) {
          table.failures.push_back({alpha, t, seed, e.what()});
        }
      }
  return table;
}

}  // namespace crn
