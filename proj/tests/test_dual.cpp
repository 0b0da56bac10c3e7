#include <gtest/gtest.h>

#include "crn/dual.hpp"
#include "test_util.hpp"

using namespace crn;

namespace {

// dual function of the toy at price u, via closed forms and a fine grid:
// transport part max ln e - u e plus physical part max u Phi(W, q).
double toy_dual_oracle(const Scenario& s, double u) {
  NodeContext ctx = make_node_context(s, 0);
  const double transport = -std::log(u) - 1.0;
  double phy = -1e300;
  for (int iq = 0; iq <= 20000; ++iq) {
    const double q = ctx.power_cap * iq / 20000.0;
    phy = std::max(phy, u * link_capacity(ctx.bandwidth, CMat::Constant(1, 1, q), ctx.links[0]));
  }
  return transport + phy;
}

}  // namespace

TEST(Subgradient, SignConvention) {
  std::vector<SessionFlow> flows(1);
  flows[0].session_id = 0;
  flows[0].link_flow = Eigen::VectorXd::Constant(1, 5.0);
  EXPECT_DOUBLE_EQ(compute_subgradient(5.0, flows, 0), 0.0);
  EXPECT_DOUBLE_EQ(compute_subgradient(3.0, flows, 0), -2.0);
}

TEST(UpdatePrices, ClosedFormExamples) {
  PriceVector u = PriceVector::constant(1, 1.0);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_DOUBLE_EQ(update_prices(u, d, 0, 0.1).u(0), 0.95);
  PriceVector small = PriceVector::constant(1, 0.01);
  EXPECT_DOUBLE_EQ(update_prices(small, d, 0, 0.1).u(0), 0.0);  // projection
  Eigen::VectorXd over = Eigen::VectorXd::Constant(1, -2.0);
  EXPECT_GT(update_prices(u, over, 0, 0.1).u(0), u.u(0));  // over-utilized link gets pricier
  // diminishing schedule
  EXPECT_NEAR(update_prices(u, d, 3, 0.1).u(0), 1.0 - 0.1 / 2.0 * 0.5, 1e-15);
  EXPECT_THROW(update_prices(u, d, -1, 0.1), std::invalid_argument);
}

TEST(Subgradient, MatchesFiniteDifferenceOfDual) {
  // PU constraint disabled (inert cross channel, rho -> min rate far below
  // baseline), so both subproblems are solved exactly
  Scenario s = testutil::toy_scenario(0.0, 0.0);
  NodeContext ctx = make_node_context(s, 0);
  for (double u : {0.7, 1.1, 1.9}) {
    PriceVector prices = PriceVector::constant(1, u);
    SessionFlow f = solve_session(prices, s.sessions[0], s);
    NodeDecision init = init_node_decision(ctx, s.solver);
    AlternatingResult res = alternating_optimize(ctx, prices, init, s.solver);
    const double cap = link_capacity(res.decision.bandwidth[0], res.decision.covariance[0], ctx.links[0]);
    const double d = compute_subgradient(cap, {f}, 0);
    const double h = 1e-4 * u;
    const double fd = (toy_dual_oracle(s, u + h) - toy_dual_oracle(s, u - h)) / (2.0 * h);
    EXPECT_NEAR(d, fd, 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Subgradient, SupergradientInequalityOfConvexDual) {
  Scenario s = testutil::toy_scenario(0.0, 0.0);
  NodeContext ctx = make_node_context(s, 0);
  Rng rng(401);
  const double u0 = 1.3;
  PriceVector prices = PriceVector::constant(1, u0);
  SessionFlow f = solve_session(prices, s.sessions[0], s);
  AlternatingResult res = alternating_optimize(ctx, prices, init_node_decision(ctx, s.solver), s.solver);
  const double cap = link_capacity(res.decision.bandwidth[0], res.decision.covariance[0], ctx.links[0]);
  const double d = compute_subgradient(cap, {f}, 0);
  const double d_u0 = toy_dual_oracle(s, u0);
  for (int trial = 0; trial < 20; ++trial) {
    const double u1 = 0.3 + 2.5 * rng.uniform();
    EXPECT_GE(toy_dual_oracle(s, u1) - (d_u0 + d * (u1 - u0)), -1e-4);
  }
}

TEST(RunDual, ZeroIterationsIsNoOp) {
  Scenario s = testutil::toy_scenario();
  DualResult res = run_dual_decomposition(s, 0);
  EXPECT_EQ(res.trace.size(), 0u);
  EXPECT_DOUBLE_EQ(res.final_prices.u(0), s.solver.price_init);
  EXPECT_TRUE(res.messages.records.empty());
}

TEST(RunDual, ToyPricesBalanceLink) {
  // single link, inert PU: capacity is constant, so the price must converge
  // until the flow matches it
  Scenario s = testutil::toy_scenario(0.0, 0.3);
  s.solver.step_size_base = 0.5;
  DualResult res = run_dual_decomposition(s, 300);
  const double gap = std::abs(res.trace.capacities.back()(0) - res.trace.loads.back()(0));
  EXPECT_LE(gap, 1e-2);
  // against the direct solve of the concave program: e* = Phi(B, alpha P)
  NodeContext ctx = make_node_context(s, 0);
  const double cap_star = link_capacity(ctx.bandwidth, CMat::Constant(1, 1, ctx.power_cap), ctx.links[0]);
  EXPECT_NEAR(res.trace.loads.back()(0), cap_star, 2e-2 * std::max(1.0, cap_star));
}

TEST(RunDual, PricesStayNonnegativeAndTraceConsistent) {
  Scenario s = generate_channels(make_paper_scenario(4), 4);
  s.solver.dual_iters = 8;
  DualResult res = run_dual_decomposition(s, 8);
  ASSERT_EQ(res.trace.size(), 8u);
  for (std::size_t k = 0; k < res.trace.size(); ++k) {
    EXPECT_GE(res.trace.prices[k].minCoeff(), 0.0);
    EXPECT_EQ(res.trace.prices[k].size(), 56);
    EXPECT_LE(res.trace.max_pu_violations[k], 1e-6);
  }
  // every node's bandwidth stays within budget at every iteration
  for (std::size_t k = 0; k < res.trace.size(); ++k)
    for (const SuNode& n : s.nodes) {
      double wsum = 0.0;
      for (int lid : n.outgoing) wsum += res.trace.bandwidths[k](lid);
      EXPECT_LE(wsum, n.bandwidth_budget + 1e-9);
    }
}

TEST(RunDual, MessageLocality) {
  Scenario s = generate_channels(make_paper_scenario(5), 5);
  DualResult res = run_dual_decomposition(s, 3);
  ASSERT_FALSE(res.messages.records.empty());
  auto adjacent = [&](int a, int b) {
    for (const SuLink& l : s.links)
      if ((l.tx == a && l.rx == b) || (l.tx == b && l.rx == a)) return true;
    return false;
  };
  for (const Message& msg : res.messages.records) EXPECT_TRUE(adjacent(msg.sender, msg.receiver));
}

TEST(RunDual, DeterministicAcrossThreadCounts) {
  Scenario s = generate_channels(make_paper_scenario(6), 6);
  DualResult a = run_dual_decomposition(s, 4, 1);
  DualResult b = run_dual_decomposition(s, 4, 4);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    ASSERT_TRUE(a.trace.prices[k] == b.trace.prices[k]);
    ASSERT_TRUE(a.trace.subgradients[k] == b.trace.subgradients[k]);
    ASSERT_TRUE(a.trace.bandwidths[k] == b.trace.bandwidths[k]);
    ASSERT_EQ(a.trace.utilities[k], b.trace.utilities[k]);
    ASSERT_EQ(a.trace.total_powers[k], b.trace.total_powers[k]);
  }
  ASSERT_TRUE(a.final_prices.u == b.final_prices.u);
}

TEST(AverageBandwidth, WindowArithmetic) {
  IterationTrace trace;
  trace.bandwidths.push_back(Eigen::VectorXd::Constant(1, 8.0));
  trace.bandwidths.push_back(Eigen::VectorXd::Constant(1, 2.0));
  trace.bandwidths.push_back(Eigen::VectorXd::Constant(1, 4.0));
  trace.prices.resize(3);
  EXPECT_DOUBLE_EQ(average_bandwidth(trace, 2)(0), 3.0);
  EXPECT_DOUBLE_EQ(average_bandwidth(trace, 1)(0), 4.0);
  EXPECT_THROW(average_bandwidth(trace, 4), std::invalid_argument);
  EXPECT_THROW(average_bandwidth(trace, 0), std::invalid_argument);
}

TEST(AverageBandwidth, ConstantTraceIsIdentity) {
  Scenario s = testutil::toy_scenario(0.0, 0.3);
  DualResult res = run_dual_decomposition(s, 30);
  Eigen::VectorXd wbar = average_bandwidth(res.trace, 10);
  // single link: W = B at every iteration
  EXPECT_NEAR(wbar(0), s.nodes[0].bandwidth_budget, 1e-9);
}

TEST(AverageBandwidth, StaysWithinBudgets) {
  Scenario s = generate_channels(make_paper_scenario(7), 7);
  DualResult res = run_dual_decomposition(s, 25);
  Eigen::VectorXd wbar = average_bandwidth(res.trace, 20);
  for (const SuNode& n : s.nodes) {
    double wsum = 0.0;
    for (int lid : n.outgoing) wsum += wbar(lid);
    EXPECT_LE(wsum, n.bandwidth_budget + 1e-9);
  }
}
