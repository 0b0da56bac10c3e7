#include <gtest/gtest.h>

#include "crn/recovery.hpp"
#include "test_util.hpp"

using namespace crn;

namespace {

FeasibleSolution zero_solution(const Scenario& s) {
  FeasibleSolution sol;
  const int nl = static_cast<int>(s.links.size());
  for (const SuNode& n : s.nodes) {
    NodeDecision d;
    d.node_id = n.id;
    const int t = s.antennas;
    d.bandwidth.assign(n.outgoing.size(), 0.0);
    d.covariance.assign(n.outgoing.size(), CMat::Zero(t, t));
    sol.decisions.push_back(d);
  }
  for (const Session& f : s.sessions) {
    SessionFlow flow;
    flow.session_id = f.id;
    flow.demand = 0.0;
    flow.link_flow = Eigen::VectorXd::Zero(nl);
    sol.flows.push_back(flow);
  }
  sol.prices = PriceVector::constant(nl, 0.0);
  return sol;
}

}  // namespace

TEST(VerifyFeasibility, AllZeroSolutionIsFeasible) {
  Scenario s = testutil::toy_scenario();
  FeasibleSolution sol = zero_solution(s);
  FeasibilityReport rep = verify_feasibility(sol, s);
  EXPECT_TRUE(rep.feasible);
  EXPECT_LE(rep.max_violation(), 1e-12);
}

TEST(VerifyFeasibility, NamesOverloadedLink) {
  Scenario s = testutil::toy_scenario();
  FeasibleSolution sol = zero_solution(s);
  // capacity of the zero decision is zero; inject 0.5 units of flow, fixing
  // conservation by adjusting the demand
  sol.flows[0].link_flow(0) = 0.5;
  sol.flows[0].demand = 0.5;
  FeasibilityReport rep = verify_feasibility(sol, s);
  EXPECT_FALSE(rep.feasible);
  EXPECT_NEAR(rep.capacity_violation, 0.5, 1e-12);
  EXPECT_EQ(rep.worst_capacity_link, 0);
  EXPECT_LE(rep.flow_violation, 1e-12);
}

TEST(VerifyFeasibility, DetectsBudgetAndConservationViolations) {
  Scenario s = testutil::random_node_scenario(2, 431);
  FeasibleSolution sol = zero_solution(s);
  sol.decisions[0].bandwidth = {15.0, 15.0};  // 30 > B = 20
  FeasibilityReport rep = verify_feasibility(sol, s);
  EXPECT_FALSE(rep.feasible);
  EXPECT_NEAR(rep.bandwidth_violation, 10.0, 1e-12);
  EXPECT_EQ(rep.worst_bandwidth_node, 0);

  FeasibleSolution sol2 = zero_solution(s);
  sol2.flows[0].demand = 1.0;  // demand without any flow
  FeasibilityReport rep2 = verify_feasibility(sol2, s);
  EXPECT_FALSE(rep2.feasible);
  EXPECT_NEAR(rep2.flow_violation, 1.0, 1e-12);
}

TEST(RecoverPrimal, ToyMatchesGridOracle) {
  Scenario s = testutil::toy_scenario(0.0, 0.4);
  DualResult dual = run_dual_decomposition(s, 120);
  Eigen::VectorXd wbar = average_bandwidth(dual.trace, 20);
  RecoveryResult rec = recover_primal(s, wbar, dual.decisions, dual.final_prices, 1, &dual.contexts);
  FeasibilityReport rep = verify_feasibility(rec.solution, s);
  EXPECT_TRUE(rep.feasible);
  // grid optimum of max ln e s.t. e <= Phi(wbar, q), q <= power cap
  NodeContext ctx = dual.contexts[0];
  double best = -1e300;
  for (int iq = 0; iq <= 4000; ++iq) {
    const double q = ctx.power_cap * iq / 4000.0;
    if (pu_rate({wbar(0)}, {CMat::Constant(1, 1, q)}, ctx) < ctx.min_rate) continue;
    best = std::max(best, std::log(link_capacity(wbar(0), CMat::Constant(1, 1, q), ctx.links[0])));
  }
  EXPECT_GE(rec.solution.utility, best - 0.02 * std::abs(best));
}

TEST(RecoverPrimal, ZeroCovarianceStartImproves) {
  Scenario s = testutil::toy_scenario(0.8, 0.6);
  const int nl = 1;
  std::vector<NodeDecision> q0(2);
  q0[0].node_id = 0;
  q0[0].bandwidth = {1.0};
  q0[0].covariance = {CMat::Zero(1, 1)};
  q0[1].node_id = 1;
  Eigen::VectorXd wbar = Eigen::VectorXd::Constant(nl, 1.0);
  RecoveryResult rec = recover_primal(s, wbar, q0, PriceVector::constant(nl, 1.0));
  FeasibilityReport rep = verify_feasibility(rec.solution, s);
  EXPECT_TRUE(rep.feasible);
  // strictly better than the zero-rate floor
  EXPECT_GT(rec.solution.utility, std::log(s.solver.demand_floor) + 1.0);
}

TEST(RecoverPrimal, CccpOuterMonotone) {
  Scenario s = testutil::toy_scenario(1.0, 0.7);
  s.solver.recovery_outer_iters = 5;
  DualResult dual = run_dual_decomposition(s, 60);
  Eigen::VectorXd wbar = average_bandwidth(dual.trace, 20);
  RecoveryResult rec = recover_primal(s, wbar, dual.decisions, dual.final_prices, 1, &dual.contexts);
  for (std::size_t k = 1; k < rec.outer_utilities.size(); ++k)
    EXPECT_GE(rec.outer_utilities[k], rec.outer_utilities[k - 1] - 1e-9);
}

TEST(RecoverPrimal, IdempotentOnOwnOutput) {
  Scenario s = testutil::toy_scenario(0.7, 0.5);
  DualResult dual = run_dual_decomposition(s, 80);
  Eigen::VectorXd wbar = average_bandwidth(dual.trace, 20);
  RecoveryResult rec = recover_primal(s, wbar, dual.decisions, dual.final_prices, 1, &dual.contexts);
  RecoveryResult again =
      recover_primal(s, wbar, rec.solution.decisions, rec.solution.prices, 1, &dual.contexts);
  EXPECT_NEAR(again.solution.utility, rec.solution.utility,
              s.solver.outer_tol * std::max(1.0, std::abs(rec.solution.utility)));
}

TEST(RecoverPrimal, RescuesInfeasibleAveragedStart) {
  // averaged bandwidths can break the PU constraint at the final Q; the
  // bisection rescue must restore true feasibility before the loop starts
  Scenario s = testutil::random_node_scenario(3, 439, 0.85);
  DualResult dual = run_dual_decomposition(s, 40);
  Eigen::VectorXd wbar = average_bandwidth(dual.trace, 10);
  RecoveryResult rec = recover_primal(s, wbar, dual.decisions, dual.final_prices, 1, &dual.contexts);
  FeasibilityReport rep = verify_feasibility(rec.solution, s);
  EXPECT_TRUE(rep.feasible);
}

TEST(RunFullPipeline, SmallPaperInstanceIsFeasible) {
  Scenario s = generate_channels(make_paper_scenario(8), 8);
  s.solver.dual_iters = 120;
  s.solver.averaging_window = 20;
  s.solver.recovery_dual_iters = 60;
  DualResult dual;
  RecoveryResult rec = run_full_pipeline(s, 2, &dual);
  FeasibilityReport rep = verify_feasibility(rec.solution, s);
  EXPECT_TRUE(rep.feasible);
  EXPECT_EQ(dual.trace.size(), 120u);
  // every session carries nontrivial rate
  for (const SessionFlow& f : rec.solution.flows) EXPECT_GT(f.demand, 0.1);
  // power accounting
  double tr = 0.0;
  for (const NodeDecision& d : rec.solution.decisions)
    for (const CMat& q : d.covariance) tr += trace_re(q);
  EXPECT_DOUBLE_EQ(rec.solution.total_power, tr);
}
