#include <gtest/gtest.h>

#include "crn/capacity.hpp"
#include "test_util.hpp"

using namespace crn;
using testutil::capacity_oracle;
using testutil::random_complex;
using testutil::random_psd;

namespace {

LinkContext fixture_1x1(double h = 1.0, double noise = 1.0, double k = 0.0) {
  return build_link_context(CMat::Constant(1, 1, h), CMat::Constant(1, 1, k), noise);
}

LinkContext fixture_2x2(std::uint64_t seed = 5, double kscale = 0.4) {
  Rng rng(seed);
  CMat h = random_complex(2, 2, rng);
  CMat k = kscale * random_psd(2, rng);
  return build_link_context(h, k, 1.0);
}

NodeContext node_fixture(int links, std::uint64_t seed) {
  Scenario s = testutil::random_node_scenario(links, seed);
  return make_node_context(s, 0);
}

}  // namespace

TEST(LinkCapacity, ZeroCovarianceGivesZero) {
  LinkContext ctx = fixture_2x2();
  EXPECT_DOUBLE_EQ(link_capacity(3.0, CMat::Zero(2, 2), ctx), 0.0);
  EXPECT_DOUBLE_EQ(link_capacity(0.0, CMat::Zero(2, 2), ctx), 0.0);
}

TEST(LinkCapacity, ZeroBandwidthGivesZero) {
  LinkContext ctx = fixture_2x2();
  Rng rng(3);
  EXPECT_DOUBLE_EQ(link_capacity(0.0, random_psd(2, rng, 10.0), ctx), 0.0);
}

TEST(LinkCapacity, ScalarReduction) {
  LinkContext ctx = fixture_1x1();
  EXPECT_NEAR(link_capacity(1.0, CMat::Constant(1, 1, 1.0), ctx), std::log(2.0), 1e-14);
}

TEST(LinkCapacity, MatchesEigenvalueOracle) {
  Rng rng(17);
  CMat h = random_complex(2, 2, rng);
  CMat k = 0.7 * random_psd(2, rng);
  LinkContext ctx = build_link_context(h, k, 1.0);
  CMat q = random_psd(2, rng, 5.0);
  const double got = link_capacity(2.0, q, ctx);
  const double want = capacity_oracle(2.0, q, h, k, 1.0);
  EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want)));
}

TEST(LinkCapacity, RejectsBadArguments) {
  LinkContext ctx = fixture_2x2();
  Rng rng(4);
  EXPECT_THROW(link_capacity(-1.0, random_psd(2, rng), ctx), std::invalid_argument);
  EXPECT_THROW(link_capacity(1.0, -CMat::Identity(2, 2), ctx), std::invalid_argument);
}

TEST(LinkCapacity, JointConcavityOnRandomMidpoints) {
  LinkContext ctx = fixture_2x2(23);
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const double w1 = 0.5 + 19.5 * rng.uniform();
    const double w2 = 0.5 + 19.5 * rng.uniform();
    CMat q1 = random_psd(2, rng, 100.0 * rng.uniform());
    CMat q2 = random_psd(2, rng, 100.0 * rng.uniform());
    const double mid = link_capacity(0.5 * (w1 + w2), 0.5 * (q1 + q2), ctx);
    const double avg = 0.5 * (link_capacity(w1, q1, ctx) + link_capacity(w2, q2, ctx));
    EXPECT_GE(mid, avg - 1e-8);
  }
}

TEST(LinkCapacity, MonotoneInCovariance) {
  LinkContext ctx = fixture_2x2(31);
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    CMat q = random_psd(2, rng, 20.0);
    CMat d = random_psd(2, rng, 5.0 * rng.uniform());
    EXPECT_GE(link_capacity(2.0, q + d, ctx), link_capacity(2.0, q, ctx) - 1e-9);
  }
}

TEST(LinkCapacity, VanishesAsBandwidthShrinks) {
  LinkContext ctx = fixture_2x2(41);
  Rng rng(43);
  CMat q = random_psd(2, rng, 10.0);
  double prev = link_capacity(1e-3, q, ctx);
  for (double w : {1e-6, 1e-9, 1e-12}) {
    const double cur = link_capacity(w, q, ctx);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(link_capacity(1e-12, q, ctx), 1e-9);
}

TEST(LinkCapacity, GradientsMatchFiniteDifferences) {
  LinkContext ctx = fixture_2x2(47);
  Rng rng(53);
  CMat q = random_psd(2, rng, 8.0);
  const double w = 3.0;
  // W derivative
  const double h = 1e-6;
  const double fd_w = (link_capacity(w + h, q, ctx) - link_capacity(w - h, q, ctx)) / (2.0 * h);
  EXPECT_NEAR(capacity_grad_w(w, q, ctx), fd_w, 1e-5 * std::max(1.0, std::abs(fd_w)));
  // Q derivative along a random Hermitian direction
  CMat dir = random_psd(2, rng) - random_psd(2, rng);
  dir /= dir.norm();
  const double fd_q =
      (link_capacity(w, psd_project(q + h * dir), ctx) - link_capacity(w, psd_project(q - h * dir), ctx)) /
      (2.0 * h);
  const double an_q = re_trace_prod(capacity_grad_q(w, q, ctx), dir);
  EXPECT_NEAR(an_q, fd_q, 1e-4 * std::max(1.0, std::abs(fd_q)));
}

TEST(PuRate, AllZeroBandwidthGivesBaseline) {
  NodeContext ctx = node_fixture(3, 61);
  std::vector<double> w(3, 0.0);
  std::vector<CMat> q(3, CMat::Zero(2, 2));
  const double baseline = ctx.pu_bandwidth * ctx.pu_unit_rate;
  EXPECT_NEAR(pu_rate(w, q, ctx), baseline, 1e-12 * baseline);
}

TEST(PuRate, ZeroCovarianceGivesBaselineForAnyBandwidth) {
  NodeContext ctx = node_fixture(3, 67);
  std::vector<double> w = {2.0, 5.0, 1.5};
  std::vector<CMat> q(3, CMat::Zero(2, 2));
  const double baseline = ctx.pu_bandwidth * ctx.pu_unit_rate;
  EXPECT_NEAR(pu_rate(w, q, ctx), baseline, 1e-9 * baseline);
}

TEST(PuRate, ScalarClosedForm) {
  // 1x1: r = log((w n + (w/B) s + g q) / (w n + g q)), R = w r + (B - w) rho0
  Scenario s = testutil::toy_scenario(0.5);
  NodeContext ctx = make_node_context(s, 0);
  const double w = 0.4, q = 0.8;
  const double g = std::norm(ctx.links[0].g(0, 0));
  const double sig = ctx.pu_signal(0, 0).real();
  const double n = ctx.pu_noise, B = ctx.pu_bandwidth;
  const double r = std::log((w * n + w / B * sig + g * q) / (w * n + g * q));
  const double rho0 = std::log(1.0 + sig / (n * B));
  const double want = w * r + (B - w) * rho0;
  EXPECT_NEAR(pu_rate({w}, {CMat::Constant(1, 1, q)}, ctx), want, 1e-12 * std::abs(want));
}

TEST(PuRate, MatchesEigenvalueOracle) {
  NodeContext ctx = node_fixture(4, 71);
  Rng rng(73);
  std::vector<double> w = {3.0, 0.0, 4.5, 2.0};
  std::vector<CMat> q;
  for (int i = 0; i < 4; ++i) q.push_back(random_psd(2, rng, 20.0 * rng.uniform()));
  const double want = testutil::pu_rate_oracle(w, q, ctx);
  EXPECT_NEAR(pu_rate(w, q, ctx), want, 1e-9 * std::max(1.0, std::abs(want)));
}

TEST(PuRate, RejectsOverlapBeyondBand) {
  NodeContext ctx = node_fixture(2, 79);
  std::vector<double> w = {15.0, 15.0};  // 30 > B_jp = 20
  std::vector<CMat> q(2, CMat::Zero(2, 2));
  EXPECT_THROW(pu_rate(w, q, ctx), std::invalid_argument);
}
