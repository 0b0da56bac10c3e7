#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crn/hermitian.hpp"
#include "crn/scenario.hpp"

namespace crn {

// Per-link evaluation context. `white` is L^{-1} H_ls where
// N_ls I + K = L L^H, so the capacity reduces to eigenvalues of
// white * Q * white^H.
struct LinkContext {
  int link_id = 0;
  double noise_psd = 1.0;  // N_ls
  double t_weight = 0.0;
  CMat h;      // H_ls
  CMat k;      // H_{jp,ls} Q* H_{jp,ls}^H / B_jp, Hermitian PSD
  CMat white;  // whitened channel
  CMat g;      // H_{ls,jp}, SU tx -> PU rx
};

// Everything the per-node subproblem needs: outgoing link contexts plus the
// PU-side quantities shared by them.
struct NodeContext {
  int node_id = 0;
  double bandwidth = 0.0;  // B_ns
  double power_cap = 0.0;  // alpha * P_ns
  double min_rate = 0.0;   // R_jp^min
  double pu_bandwidth = 0.0;
  double pu_noise = 1.0;
  CMat pu_signal;            // S = H_jp Q* H_jp^H
  double pu_unit_rate = 0.0;  // rho0 = log det(I + S / (N_jp B_jp))
  std::vector<int> link_ids;  // ascending outgoing link ids
  std::vector<LinkContext> links;
};

inline LinkContext build_link_context(const CMat& h, const CMat& k, double noise_psd,
                                      const CMat& g = CMat(), double t_weight = 0.0, int link_id = 0) {
  if (noise_psd <= 0.0) throw std::invalid_argument("link context: noise_psd must be positive");
  if (k.size() != 0 && (k.rows() != h.rows() || !is_psd(k, 1e-9)))
    throw std::invalid_argument("link context: interference kernel must be PSD with rx dimension");
  LinkContext ctx;
  ctx.link_id = link_id;
  ctx.noise_psd = noise_psd;
  ctx.t_weight = t_weight;
  ctx.h = h;
  ctx.k = k.size() == 0 ? CMat::Zero(h.rows(), h.rows()).eval() : hermitize(k);
  ctx.g = g;
  CMat m = noise_psd * CMat::Identity(h.rows(), h.rows()) + ctx.k;
  Eigen::LLT<CMat> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("link context: noise-plus-interference matrix not PD");
  ctx.white = llt.matrixL().solve(h);
  return ctx;
}

inline NodeContext make_node_context(const Scenario& s, int node_id) {
  const SuNode& n = s.nodes.at(node_id);
  const PuLink& pu = s.pus.at(n.pu_id);
  if (pu.channel.size() == 0 || pu.covariance.size() == 0 || (pu.has_rho && !pu.min_rate_resolved))
    throw std::runtime_error("node context: scenario has ungenerated channels; run generate_channels first");
  NodeContext ctx;
  ctx.node_id = node_id;
  ctx.bandwidth = n.bandwidth_budget;
  ctx.power_cap = n.power_fraction * n.power_budget;
  ctx.min_rate = pu.min_rate;
  ctx.pu_bandwidth = pu.total_bandwidth;
  ctx.pu_noise = pu.noise_psd;
  ctx.pu_signal = hermitize(pu.channel * pu.covariance * pu.channel.adjoint());
  const int rp = static_cast<int>(ctx.pu_signal.rows());
  ctx.pu_unit_rate = logdet_hpd(CMat::Identity(rp, rp) + ctx.pu_signal / (ctx.pu_noise * ctx.pu_bandwidth));
  for (int lid : n.outgoing) {
    const SuLink& l = s.links[lid];
    if (l.channel.size() == 0 || l.pu_to_su.size() == 0 || l.su_to_pu.size() == 0)
      throw std::runtime_error("node context: link " + std::to_string(lid) + " has ungenerated channels");
    CMat k = l.pu_to_su * pu.covariance * l.pu_to_su.adjoint() / pu.total_bandwidth;
    ctx.link_ids.push_back(lid);
    ctx.links.push_back(build_link_context(l.channel, k, l.noise_psd, l.su_to_pu, l.t_weight, lid));
  }
  return ctx;
}

inline LinkContext make_link_context(const Scenario& s, int link_id) {
  const SuLink& l = s.links.at(link_id);
  NodeContext nc = make_node_context(s, l.tx);
  for (std::size_t i = 0; i < nc.link_ids.size(); ++i)
    if (nc.link_ids[i] == link_id) return nc.links[i];
  throw std::logic_error("make_link_context: link not outgoing from its tx node");
}

namespace detail {

inline RVec clipped_eigs(const CMat& y) {
  RVec ev = hermitian_eigenvalues(y);
  for (int i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), 0.0);
  return ev;
}

inline void check_capacity_args(double w, const CMat& q, const LinkContext& ctx) {
  if (w < 0.0) throw std::invalid_argument("link_capacity: negative bandwidth");
  if (q.rows() != ctx.h.cols() || q.cols() != ctx.h.cols())
    throw std::invalid_argument("link_capacity: covariance dimension mismatch");
  if (!is_psd(q, 1e-8)) throw std::invalid_argument("link_capacity: covariance is not Hermitian PSD");
}

}  // namespace detail

// SU link capacity
//   Phi(W, Q) = W log |W N I + W K + H Q H^H| / |W N I + W K|
//             = W sum_i log(1 + lambda_i / W),  lambda = eig(white Q white^H),
// which extends continuously to 0 at W = 0.
inline double link_capacity(double w, const CMat& q, const LinkContext& ctx) {
  detail::check_capacity_args(w, q, ctx);
  if (w == 0.0) return 0.0;
  RVec ev = detail::clipped_eigs(hermitize(ctx.white * q * ctx.white.adjoint()));
  double acc = 0.0;
  for (int i = 0; i < ev.size(); ++i) acc += std::log1p(ev(i) / w);
  return w * acc;
}

// Gradient of Phi with respect to Q (Hermitian coefficient matrix G such
// that dPhi = Re Tr(G dQ)): W * white^H (W I + white Q white^H)^{-1} white.
inline CMat capacity_grad_q(double w, const CMat& q, const LinkContext& ctx) {
  const int r = static_cast<int>(ctx.white.rows());
  if (w <= 0.0) throw std::invalid_argument("capacity_grad_q: bandwidth must be positive");
  CMat y = hermitize(ctx.white * q * ctx.white.adjoint());
  CMat inv = (w * CMat::Identity(r, r) + y).inverse();
  return hermitize(w * ctx.white.adjoint() * inv * ctx.white);
}

// dPhi/dW = sum_i [ log(1 + lambda_i/W) - lambda_i / (W + lambda_i) ] >= 0.
inline double capacity_grad_w(double w, const CMat& q, const LinkContext& ctx) {
  if (w <= 0.0) throw std::invalid_argument("capacity_grad_w: bandwidth must be positive");
  RVec ev = detail::clipped_eigs(hermitize(ctx.white * q * ctx.white.adjoint()));
  double acc = 0.0;
  for (int i = 0; i < ev.size(); ++i) acc += std::log1p(ev(i) / w) - ev(i) / (w + ev(i));
  return acc;
}

namespace detail {

// Interfered-band PU rate density of one SU link:
//   r(W, Q) = log |W N I + (W/B) S + G Q G^H| - log |W N I + G Q G^H|
//           = sum_i log(1 + (W/B) sigma_i),  sigma = eig(L0^{-1} S L0^{-H}),
// where A0 = W N I + G Q G^H = L0 L0^H.
inline double pu_link_rate_density(double w, const CMat& q, const LinkContext& ctx, const NodeContext& node) {
  const int rp = static_cast<int>(node.pu_signal.rows());
  CMat a0 = w * node.pu_noise * CMat::Identity(rp, rp) + hermitize(ctx.g * q * ctx.g.adjoint());
  Eigen::LLT<CMat> llt(a0);
  if (llt.info() != Eigen::Success) throw std::runtime_error("pu_rate: interference matrix not PD (W too small?)");
  CMat z = llt.matrixL().solve(CMat(llt.matrixL().solve(node.pu_signal)).adjoint());
  RVec ev = clipped_eigs(hermitize(z));
  double acc = 0.0;
  for (int i = 0; i < ev.size(); ++i) acc += std::log1p(w / node.pu_bandwidth * ev(i));
  return acc;
}

// d/dW of r at fixed Q: Tr(A1^{-1} (N I + S/B)) - N Tr(A0^{-1}).
inline double pu_link_rate_density_dw(double w, const CMat& q, const LinkContext& ctx, const NodeContext& node) {
  const int rp = static_cast<int>(node.pu_signal.rows());
  CMat x = hermitize(ctx.g * q * ctx.g.adjoint());
  CMat a0 = w * node.pu_noise * CMat::Identity(rp, rp) + x;
  CMat a1 = a0 + (w / node.pu_bandwidth) * node.pu_signal;
  CMat d1 = node.pu_noise * CMat::Identity(rp, rp) + node.pu_signal / node.pu_bandwidth;
  return (a1.inverse() * d1).trace().real() - node.pu_noise * a0.inverse().trace().real();
}

}  // namespace detail

// PU rate seen by one SU node: interfered part over each outgoing link's
// band plus the untouched remainder of the PU band,
//   R = sum_ls W_ls r^ls(W_ls, Q_ls) + (B_jp - sum_ls W_ls) rho0.
// Links with W = 0 contribute nothing to the first sum.
inline double pu_rate(const std::vector<double>& w, const std::vector<CMat>& q, const NodeContext& node) {
  if (w.size() != node.links.size() || q.size() != node.links.size())
    throw std::invalid_argument("pu_rate: per-link vectors do not match the node's outgoing links");
  double wsum = 0.0;
  for (double wi : w) {
    if (wi < 0.0) throw std::invalid_argument("pu_rate: negative bandwidth");
    wsum += wi;
  }
  if (wsum > node.pu_bandwidth * (1.0 + 1e-9) + 1e-12)
    throw std::invalid_argument("pu_rate: total overlap exceeds the PU bandwidth");
  double rate = (node.pu_bandwidth - wsum) * node.pu_unit_rate;
  for (std::size_t i = 0; i < node.links.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (!is_psd(q[i], 1e-8)) throw std::invalid_argument("pu_rate: covariance is not Hermitian PSD");
    rate += w[i] * detail::pu_link_rate_density(w[i], q[i], node.links[i], node);
  }
  return rate;
}

// Affine surrogate of the PU rate around an expansion point. Exact at the
// expansion point; the Q-form is a global under-estimator because the rate
// is convex in each Q_ls (log det(I + S Y^{-1}) with Y affine in Q).
struct AffineRateModel {
  double constant = 0.0;
  std::vector<double> w_coeffs;
  std::vector<CMat> q_coeffs;
  std::vector<double> w_point;
  std::vector<CMat> q_point;

  double value(const std::vector<double>& w, const std::vector<CMat>& q) const {
    double v = constant;
    for (std::size_t i = 0; i < w_coeffs.size(); ++i) v += w_coeffs[i] * w[i];
    for (std::size_t i = 0; i < q_coeffs.size(); ++i)
      if (q_coeffs[i].size() != 0) v += re_trace_prod(q_coeffs[i], q[i]);
    return v;
  }
};

namespace detail {

// W_ls * G^H (A1^{-1} - A0^{-1}) G at the expansion point; negative
// semidefinite, since interference can only hurt the PU.
inline CMat pu_rate_grad_q(double w, const CMat& q, const LinkContext& ctx, const NodeContext& node) {
  const int rp = static_cast<int>(node.pu_signal.rows());
  CMat x = hermitize(ctx.g * q * ctx.g.adjoint());
  CMat a0 = w * node.pu_noise * CMat::Identity(rp, rp) + x;
  CMat a1 = a0 + (w / node.pu_bandwidth) * node.pu_signal;
  Eigen::LLT<CMat> l0(a0), l1(a1);
  if (l0.info() != Eigen::Success || l1.info() != Eigen::Success)
    throw std::runtime_error("linearize_pu_rate: singular linearization matrix");
  return hermitize(w * ctx.g.adjoint() * (l1.solve(CMat::Identity(rp, rp)) - l0.solve(CMat::Identity(rp, rp))) * ctx.g);
}

inline AffineRateModel linearize_impl(const std::vector<double>& w_tilde, const std::vector<CMat>& q_tilde,
                                      const NodeContext& node, bool in_q, bool in_w) {
  const std::size_t m = node.links.size();
  if (w_tilde.size() != m || q_tilde.size() != m)
    throw std::invalid_argument("linearize_pu_rate: expansion point does not match the node's links");
  AffineRateModel model;
  model.w_point = w_tilde;
  model.q_point = q_tilde;
  model.w_coeffs.assign(m, 0.0);
  model.q_coeffs.assign(m, CMat());
  double c = pu_rate(w_tilde, q_tilde, node);
  for (std::size_t i = 0; i < m; ++i) {
    if (in_q) {
      if (w_tilde[i] > 0.0) {
        model.q_coeffs[i] = pu_rate_grad_q(w_tilde[i], q_tilde[i], node.links[i], node);
        c -= re_trace_prod(model.q_coeffs[i], q_tilde[i]);
      } else {
        model.q_coeffs[i] = CMat::Zero(q_tilde[i].rows(), q_tilde[i].cols());
      }
    }
    if (in_w) {
      // d/dW [ W r(W) ] - rho0, the NI band shrinking as this link widens
      const double r = pu_link_rate_density(w_tilde[i], q_tilde[i], node.links[i], node);
      const double rp = pu_link_rate_density_dw(w_tilde[i], q_tilde[i], node.links[i], node);
      model.w_coeffs[i] = r + w_tilde[i] * rp - node.pu_unit_rate;
      c -= model.w_coeffs[i] * w_tilde[i];
    }
  }
  model.constant = c;
  return model;
}

}  // namespace detail

// First Taylor surrogate: affine in the Q_ls at fixed bandwidths. Tangent at
// q_tilde and a global under-estimator of pu_rate over PSD Q.
inline AffineRateModel linearize_pu_rate_in_q(const std::vector<CMat>& q_tilde, const std::vector<double>& w_fixed,
                                              const NodeContext& node) {
  for (double w : w_fixed)
    if (w < 0.0) throw std::invalid_argument("linearize_pu_rate_in_q: negative bandwidth");
  return detail::linearize_impl(w_fixed, q_tilde, node, true, false);
}

// Second Taylor surrogate: affine in the W_ls at fixed covariances. Tangent
// with the analytic derivative of W r(W); not certified one-sided, so
// callers re-check the true rate after optimizing against it.
inline AffineRateModel linearize_pu_rate_in_w(const std::vector<double>& w_tilde, const std::vector<CMat>& q_tilde,
                                              const NodeContext& node, double eps_w) {
  for (double w : w_tilde)
    if (w < eps_w)
      throw std::invalid_argument("linearize_pu_rate_in_w: expansion bandwidth below the evaluation floor");
  return detail::linearize_impl(w_tilde, q_tilde, node, false, true);
}

// Joint tangent in (W, Q), used by the centralized baseline.
inline AffineRateModel linearize_pu_rate_joint(const std::vector<double>& w_tilde, const std::vector<CMat>& q_tilde,
                                               const NodeContext& node, double eps_w) {
  for (double w : w_tilde)
    if (w < eps_w)
      throw std::invalid_argument("linearize_pu_rate_joint: expansion bandwidth below the evaluation floor");
  return detail::linearize_impl(w_tilde, q_tilde, node, true, true);
}

}  // namespace crn
