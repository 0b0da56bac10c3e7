#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crn/hermitian.hpp"
#include "crn/rng.hpp"

namespace crn {

using json = nlohmann::json;

// Secondary-user node. outgoing/incoming are link indices, derived from the
// link table during validation.
struct SuNode {
  int id = 0;
  double x = 0.0, y = 0.0;
  double bandwidth_budget = 0.0;  // B_ns
  double power_budget = 0.0;      // P_ns
  double power_fraction = 1.0;    // alpha in (0, 1]
  int pu_id = 0;
  std::vector<int> outgoing, incoming;
};

// Directed secondary link. Channel matrices of size 0x0 are generated from
// node geometry by generate_channels.
struct SuLink {
  int id = 0;
  int tx = 0, rx = 0;
  double t_weight = 0.0;   // power price in the objective
  double noise_psd = 1.0;  // N_ls
  CMat channel;            // H_ls        (rx antennas x tx antennas)
  CMat pu_to_su;           // H_{jp,ls}   (rx antennas x PU tx antennas)
  CMat su_to_pu;           // H_{ls,jp}   (PU rx antennas x tx antennas)
};

struct PuLink {
  int id = 0;
  double total_bandwidth = 0.0;  // B_jp
  double noise_psd = 1.0;        // N_jp
  CMat channel;                  // H_jp
  CMat covariance;               // Q_jp^*, Hermitian PSD
  bool has_rho = false;          // rate requirement given as a fraction of the
  double rho = 0.0;              // interference-free rate
  double min_rate = 0.0;         // R_jp^min; resolved from rho by generate_channels
  bool min_rate_resolved = false;
  double distance_pu = 0.0;        // PU link length, for channel generation
  double distance_su_to_pu = 0.0;  // SU <-> PU cross-channel distance
};

struct Session {
  int id = 0;
  int src = 0, dst = 0;
};

struct SolverParams {
  double step_size_base = 0.1;    // beta0; step k uses beta0 / sqrt(k+1)
  int dual_iters = 250;           // N
  int averaging_window = 20;      // n
  double inner_tol = 1e-6;        // relative objective change, alternating loop
  double outer_tol = 1e-4;        // relative utility change, recovery outer loop
  int max_inner_iters = 200;
  double barrier_init = 1.0;
  double barrier_decrease = 10.0;
  double bandwidth_floor = 1e-9;  // epsilon_W as a fraction of B_ns
  double price_floor = 1e-6;      // epsilon_u
  double demand_cap = 1e3;        // e_max
  double demand_floor = 1e-9;     // e_min, keeps ln-utility finite in reports
  double price_init = 1.0;        // u^(0)
  int recovery_outer_iters = 1;
  int recovery_dual_iters = 100;
  std::string log_base = "natural";
  bool real_entries = false;  // real instead of complex Gaussian channel entries
};

struct Scenario {
  std::vector<SuNode> nodes;
  std::vector<SuLink> links;
  std::vector<PuLink> pus;
  std::vector<Session> sessions;
  SolverParams solver;
  std::uint64_t seed = 0;
  int antennas = 2;  // network-wide antenna count per node side
};

namespace detail {

inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail("scenario: unknown key '" + it.key() + "' in " + where);
}

inline CMat matrix_from_json(const json& arr, int rows, int cols, const std::string& where) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != rows * cols)
    fail("scenario: " + where + " must be a flat array of " + std::to_string(rows * cols) + " [re, im] pairs");
  CMat m(rows, cols);
  for (int i = 0; i < rows * cols; ++i) {
    const json& e = arr[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      fail("scenario: " + where + " entry " + std::to_string(i) + " is not an [re, im] pair");
    m(i / cols, i % cols) = std::complex<double>(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

inline json matrix_to_json(const CMat& m) {
  json arr = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) arr.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
  return arr;
}

}  // namespace detail

// Full-band interference-free PU rate:
//   Rbar = B_jp * log det(I + H_jp Q* H_jp^H / (N_jp B_jp)).
// Converts the rho form of the rate requirement into an absolute R^min.
inline double pu_baseline_rate(const PuLink& pu) {
  if (pu.channel.size() == 0 || pu.covariance.size() == 0)
    throw std::runtime_error("pu_baseline_rate: PU " + std::to_string(pu.id) + " channel/covariance not set");
  if (!is_psd(pu.covariance, 1e-9))
    throw std::runtime_error("pu_baseline_rate: PU " + std::to_string(pu.id) + " covariance is not Hermitian PSD");
  const int r = static_cast<int>(pu.channel.rows());
  CMat a = CMat::Identity(r, r) +
           pu.channel * pu.covariance * pu.channel.adjoint() / (pu.noise_psd * pu.total_bandwidth);
  return pu.total_bandwidth * logdet_hpd(a);
}

// Structural validation: id ranges, budgets, dimensions, connectivity.
// Ids are required to be contiguous 0..n-1 so that ids and indices agree.
inline void validate_scenario(Scenario& s) {
  using detail::fail;
  const int nn = static_cast<int>(s.nodes.size());
  const int nl = static_cast<int>(s.links.size());
  const int np = static_cast<int>(s.pus.size());
  if (s.antennas <= 0) fail("scenario: antennas must be positive");
  for (int i = 0; i < nn; ++i) {
    SuNode& n = s.nodes[i];
    if (n.id != i) fail("scenario: node ids must be 0..N-1 in order (node at position " + std::to_string(i) + " has id " + std::to_string(n.id) + ")");
    if (!std::isfinite(n.x) || !std::isfinite(n.y)) fail("node " + std::to_string(n.id) + ": position not set");
    if (n.bandwidth_budget <= 0.0) fail("node " + std::to_string(n.id) + ": bandwidth budget must be positive");
    if (n.power_budget <= 0.0) fail("node " + std::to_string(n.id) + ": power budget must be positive");
    if (n.power_fraction <= 0.0 || n.power_fraction > 1.0) fail("node " + std::to_string(n.id) + ": alpha must be in (0, 1]");
    if (n.pu_id < 0 || n.pu_id >= np) fail("node " + std::to_string(n.id) + ": pu_id " + std::to_string(n.pu_id) + " does not name a PU");
    n.outgoing.clear();
    n.incoming.clear();
  }
  for (int i = 0; i < nl; ++i) {
    SuLink& l = s.links[i];
    if (l.id != i) fail("scenario: link ids must be 0..L-1 in order");
    if (l.tx < 0 || l.tx >= nn) fail("link " + std::to_string(l.id) + ": tx references node " + std::to_string(l.tx) + " of " + std::to_string(nn));
    if (l.rx < 0 || l.rx >= nn) fail("link " + std::to_string(l.id) + ": rx references node " + std::to_string(l.rx) + " of " + std::to_string(nn));
    if (l.tx == l.rx) fail("link " + std::to_string(l.id) + ": tx equals rx");
    if (l.t_weight < 0.0) fail("link " + std::to_string(l.id) + ": t_weight must be nonnegative");
    if (l.noise_psd <= 0.0) fail("link " + std::to_string(l.id) + ": noise_psd must be positive");
    const int a = s.antennas;
    const int tp = a;  // PU antennas match the network-wide count
    if (l.channel.size() != 0 && (l.channel.rows() != a || l.channel.cols() != a))
      fail("link " + std::to_string(l.id) + ": channel must be " + std::to_string(a) + "x" + std::to_string(a));
    if (l.pu_to_su.size() != 0 && (l.pu_to_su.rows() != a || l.pu_to_su.cols() != tp))
      fail("link " + std::to_string(l.id) + ": pu_to_su must be " + std::to_string(a) + "x" + std::to_string(tp));
    if (l.su_to_pu.size() != 0 && (l.su_to_pu.rows() != tp || l.su_to_pu.cols() != a))
      fail("link " + std::to_string(l.id) + ": su_to_pu must be " + std::to_string(tp) + "x" + std::to_string(a));
    s.nodes[l.tx].outgoing.push_back(l.id);
    s.nodes[l.rx].incoming.push_back(l.id);
  }
  for (int i = 0; i < np; ++i) {
    PuLink& p = s.pus[i];
    if (p.id != i) fail("scenario: pu ids must be 0..P-1 in order");
    if (p.total_bandwidth <= 0.0) fail("pu " + std::to_string(p.id) + ": bandwidth must be positive");
    if (p.noise_psd <= 0.0) fail("pu " + std::to_string(p.id) + ": noise_psd must be positive");
    if (p.has_rho && (p.rho < 0.0 || p.rho > 1.0)) fail("pu " + std::to_string(p.id) + ": rho must be in [0, 1]");
    if (!p.has_rho && p.min_rate < 0.0) fail("pu " + std::to_string(p.id) + ": min_rate must be nonnegative");
    const int a = s.antennas;
    if (p.channel.size() != 0 && (p.channel.rows() != a || p.channel.cols() != a))
      fail("pu " + std::to_string(p.id) + ": channel must be " + std::to_string(a) + "x" + std::to_string(a));
    if (p.covariance.size() != 0) {
      if (p.covariance.rows() != a || p.covariance.cols() != a)
        fail("pu " + std::to_string(p.id) + ": covariance must be " + std::to_string(a) + "x" + std::to_string(a));
      if (!is_psd(p.covariance, 1e-9)) fail("pu " + std::to_string(p.id) + ": covariance is not Hermitian PSD");
    }
    if (p.channel.size() == 0 && p.distance_pu <= 0.0)
      fail("pu " + std::to_string(p.id) + ": distance_pu must be positive when the channel is generated");
    if (p.distance_su_to_pu <= 0.0) fail("pu " + std::to_string(p.id) + ": distance_su_to_pu must be positive");
  }
  // session endpoints + reachability over the directed link graph
  for (std::size_t i = 0; i < s.sessions.size(); ++i) {
    const Session& f = s.sessions[i];
    if (f.id != static_cast<int>(i)) fail("scenario: session ids must be 0..F-1 in order");
    if (f.src < 0 || f.src >= nn) fail("session " + std::to_string(f.id) + ": src references node " + std::to_string(f.src));
    if (f.dst < 0 || f.dst >= nn) fail("session " + std::to_string(f.id) + ": dst references node " + std::to_string(f.dst));
    if (f.src == f.dst) fail("session " + std::to_string(f.id) + ": src equals dst");
    std::vector<char> seen(nn, 0);
    std::queue<int> q;
    q.push(f.src);
    seen[f.src] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int lid : s.nodes[v].outgoing)
        if (!seen[s.links[lid].rx]) {
          seen[s.links[lid].rx] = 1;
          q.push(s.links[lid].rx);
        }
    }
    if (!seen[f.dst]) fail("session " + std::to_string(f.id) + ": no path from node " + std::to_string(f.src) + " to node " + std::to_string(f.dst));
  }
  const SolverParams& p = s.solver;
  if (p.step_size_base <= 0.0 || p.dual_iters < 0 || p.averaging_window <= 0 || p.inner_tol <= 0.0 ||
      p.outer_tol <= 0.0 || p.max_inner_iters <= 0 || p.barrier_init <= 0.0 || p.barrier_decrease <= 1.0 ||
      p.bandwidth_floor <= 0.0 || p.price_floor <= 0.0 || p.demand_cap <= 0.0 || p.demand_floor <= 0.0 ||
      p.price_init < 0.0 || p.recovery_outer_iters <= 0 || p.recovery_outer_iters > 10 || p.recovery_dual_iters <= 0)
    fail("scenario: solver parameters must be positive (and recovery outer iterations in 1..10)");
  if (p.dual_iters > 0 && p.averaging_window > p.dual_iters)
    fail("scenario: averaging_window exceeds dual_iters");
  if (p.log_base != "natural") fail("scenario: log_base must be 'natural'");
}

inline Scenario scenario_from_json(const json& j) {
  using detail::check_keys;
  using detail::fail;
  using detail::matrix_from_json;
  if (!j.is_object()) fail("scenario: top level must be an object");
  check_keys(j, {"nodes", "links", "pus", "sessions", "solver", "seed", "antennas"}, "top level");
  for (const char* k : {"nodes", "links", "pus", "sessions", "seed"})
    if (!j.contains(k)) fail(std::string("scenario: missing required key '") + k + "'");

  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.antennas = j.value("antennas", 2);
  const int a = s.antennas;

  for (const json& nj : j.at("nodes")) {
    check_keys(nj, {"id", "x", "y", "bandwidth", "power", "alpha", "pu_id"}, "node");
    for (const char* k : {"id", "x", "y", "bandwidth", "power", "alpha", "pu_id"})
      if (!nj.contains(k)) fail(std::string("scenario: node missing key '") + k + "'");
    SuNode n;
    n.id = nj.at("id").get<int>();
    n.x = nj.at("x").get<double>();
    n.y = nj.at("y").get<double>();
    n.bandwidth_budget = nj.at("bandwidth").get<double>();
    n.power_budget = nj.at("power").get<double>();
    n.power_fraction = nj.at("alpha").get<double>();
    n.pu_id = nj.at("pu_id").get<int>();
    s.nodes.push_back(std::move(n));
  }
  for (const json& lj : j.at("links")) {
    check_keys(lj, {"id", "tx", "rx", "t_weight", "noise_psd", "channel", "pu_to_su", "su_to_pu"}, "link");
    for (const char* k : {"id", "tx", "rx", "t_weight"})
      if (!lj.contains(k)) fail(std::string("scenario: link missing key '") + k + "'");
    SuLink l;
    l.id = lj.at("id").get<int>();
    l.tx = lj.at("tx").get<int>();
    l.rx = lj.at("rx").get<int>();
    l.t_weight = lj.at("t_weight").get<double>();
    l.noise_psd = lj.value("noise_psd", 1.0);
    const std::string tag = "link " + std::to_string(l.id);
    if (lj.contains("channel")) l.channel = matrix_from_json(lj.at("channel"), a, a, tag + " channel");
    if (lj.contains("pu_to_su")) l.pu_to_su = matrix_from_json(lj.at("pu_to_su"), a, a, tag + " pu_to_su");
    if (lj.contains("su_to_pu")) l.su_to_pu = matrix_from_json(lj.at("su_to_pu"), a, a, tag + " su_to_pu");
    s.links.push_back(std::move(l));
  }
  for (const json& pj : j.at("pus")) {
    check_keys(pj, {"id", "bandwidth", "noise_psd", "channel", "covariance", "min_rate", "rho", "distance_pu", "distance_su_to_pu"}, "pu");
    for (const char* k : {"id", "bandwidth"})
      if (!pj.contains(k)) fail(std::string("scenario: pu missing key '") + k + "'");
    PuLink p;
    p.id = pj.at("id").get<int>();
    p.total_bandwidth = pj.at("bandwidth").get<double>();
    p.noise_psd = pj.value("noise_psd", 1.0);
    const std::string tag = "pu " + std::to_string(p.id);
    if (pj.contains("channel")) p.channel = matrix_from_json(pj.at("channel"), a, a, tag + " channel");
    if (pj.contains("covariance")) p.covariance = matrix_from_json(pj.at("covariance"), a, a, tag + " covariance");
    if (pj.contains("min_rate") == pj.contains("rho"))
      fail(tag + ": exactly one of min_rate / rho must be given");
    if (pj.contains("rho")) {
      p.has_rho = true;
      p.rho = pj.at("rho").get<double>();
    } else {
      p.min_rate = pj.at("min_rate").get<double>();
      p.min_rate_resolved = true;
    }
    p.distance_pu = pj.value("distance_pu", 0.0);
    p.distance_su_to_pu = pj.value("distance_su_to_pu", 0.0);
    s.pus.push_back(std::move(p));
  }
  for (const json& fj : j.at("sessions")) {
    check_keys(fj, {"id", "src", "dst"}, "session");
    for (const char* k : {"id", "src", "dst"})
      if (!fj.contains(k)) fail(std::string("scenario: session missing key '") + k + "'");
    s.sessions.push_back({fj.at("id").get<int>(), fj.at("src").get<int>(), fj.at("dst").get<int>()});
  }
  if (j.contains("solver")) {
    const json& pj = j.at("solver");
    check_keys(pj,
               {"step_size_base", "dual_iters", "averaging_window", "inner_tol", "outer_tol", "max_inner_iters",
                "barrier_init", "barrier_decrease", "bandwidth_floor", "price_floor", "demand_cap", "demand_floor",
                "price_init", "recovery_outer_iters", "recovery_dual_iters", "log_base", "real_entries"},
               "solver");
    SolverParams& p = s.solver;
    p.step_size_base = pj.value("step_size_base", p.step_size_base);
    p.dual_iters = pj.value("dual_iters", p.dual_iters);
    p.averaging_window = pj.value("averaging_window", p.averaging_window);
    p.inner_tol = pj.value("inner_tol", p.inner_tol);
    p.outer_tol = pj.value("outer_tol", p.outer_tol);
    p.max_inner_iters = pj.value("max_inner_iters", p.max_inner_iters);
    p.barrier_init = pj.value("barrier_init", p.barrier_init);
    p.barrier_decrease = pj.value("barrier_decrease", p.barrier_decrease);
    p.bandwidth_floor = pj.value("bandwidth_floor", p.bandwidth_floor);
    p.price_floor = pj.value("price_floor", p.price_floor);
    p.demand_cap = pj.value("demand_cap", p.demand_cap);
    p.demand_floor = pj.value("demand_floor", p.demand_floor);
    p.price_init = pj.value("price_init", p.price_init);
    p.recovery_outer_iters = pj.value("recovery_outer_iters", p.recovery_outer_iters);
    p.recovery_dual_iters = pj.value("recovery_dual_iters", p.recovery_dual_iters);
    p.log_base = pj.value("log_base", p.log_base);
    p.real_entries = pj.value("real_entries", p.real_entries);
  }
  validate_scenario(s);
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  using detail::matrix_to_json;
  json j;
  j["seed"] = s.seed;
  j["antennas"] = s.antennas;
  j["nodes"] = json::array();
  for (const SuNode& n : s.nodes)
    j["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"bandwidth", n.bandwidth_budget},
                          {"power", n.power_budget}, {"alpha", n.power_fraction}, {"pu_id", n.pu_id}});
  j["links"] = json::array();
  for (const SuLink& l : s.links) {
    json lj = {{"id", l.id}, {"tx", l.tx}, {"rx", l.rx}, {"t_weight", l.t_weight}, {"noise_psd", l.noise_psd}};
    if (l.channel.size() != 0) lj["channel"] = matrix_to_json(l.channel);
    if (l.pu_to_su.size() != 0) lj["pu_to_su"] = matrix_to_json(l.pu_to_su);
    if (l.su_to_pu.size() != 0) lj["su_to_pu"] = matrix_to_json(l.su_to_pu);
    j["links"].push_back(std::move(lj));
  }
  j["pus"] = json::array();
  for (const PuLink& p : s.pus) {
    json pj = {{"id", p.id}, {"bandwidth", p.total_bandwidth}, {"noise_psd", p.noise_psd},
               {"distance_pu", p.distance_pu}, {"distance_su_to_pu", p.distance_su_to_pu}};
    if (p.channel.size() != 0) pj["channel"] = matrix_to_json(p.channel);
    if (p.covariance.size() != 0) pj["covariance"] = matrix_to_json(p.covariance);
    if (p.has_rho)
      pj["rho"] = p.rho;
    else
      pj["min_rate"] = p.min_rate;
    j["pus"].push_back(std::move(pj));
  }
  j["sessions"] = json::array();
  for (const Session& f : s.sessions) j["sessions"].push_back({{"id", f.id}, {"src", f.src}, {"dst", f.dst}});
  j["solver"] = {{"step_size_base", s.solver.step_size_base},
                 {"dual_iters", s.solver.dual_iters},
                 {"averaging_window", s.solver.averaging_window},
                 {"inner_tol", s.solver.inner_tol},
                 {"outer_tol", s.solver.outer_tol},
                 {"max_inner_iters", s.solver.max_inner_iters},
                 {"barrier_init", s.solver.barrier_init},
                 {"barrier_decrease", s.solver.barrier_decrease},
                 {"bandwidth_floor", s.solver.bandwidth_floor},
                 {"price_floor", s.solver.price_floor},
                 {"demand_cap", s.solver.demand_cap},
                 {"demand_floor", s.solver.demand_floor},
                 {"price_init", s.solver.price_init},
                 {"recovery_outer_iters", s.solver.recovery_outer_iters},
                 {"recovery_dual_iters", s.solver.recovery_dual_iters},
                 {"log_base", s.solver.log_base},
                 {"real_entries", s.solver.real_entries}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("load_scenario: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    detail::fail("load_scenario: parse error in '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) detail::fail("save_scenario: cannot open '" + path + "'");
  out << scenario_to_json(s).dump(1) << "\n";
}

// Large-scale power path gain (200/d)^3.5 of the measurement model; the
// amplitude multiplier applied to the fast-fading matrix is its square root.
inline double path_gain(double distance) {
  if (distance <= 0.0) throw std::runtime_error("path_gain: distance must be positive");
  return std::pow(200.0 / distance, 3.5);
}

namespace detail {

// H = sqrt(g * L) * Hbar with 10 log10(L) ~ N(0, 8^2) and Hbar i.i.d.
// unit-variance (complex by default) Gaussian entries.
inline CMat draw_channel(double distance, int rows, int cols, bool real_entries, Rng& rng) {
  const double shadow_db = 8.0 * rng.normal();
  const double shadow = std::pow(10.0, shadow_db / 10.0);
  const double amp = std::sqrt(path_gain(distance) * shadow);
  CMat h(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      h(r, c) = real_entries ? std::complex<double>(rng.normal(), 0.0) : rng.cnormal();
  return amp * h;
}

constexpr double kPuTxPower = 100.0;  // PU transmit power for the water-filling default

}  // namespace detail

// Fills every channel matrix that the file left unset and resolves rho-form
// rate requirements. Pure in (scenario, seed): each matrix draws from its own
// substream, so inline matrices never shift the generated ones.
inline Scenario generate_channels(const Scenario& in, std::uint64_t seed) {
  Scenario s = in;
  const int a = s.antennas;
  for (PuLink& p : s.pus) {
    if (p.channel.size() == 0) {
      if (p.distance_pu <= 0.0) detail::fail("generate_channels: pu " + std::to_string(p.id) + " has no channel and no distance_pu");
      Rng rng(mix_seed(seed, 0x50, static_cast<std::uint64_t>(p.id)));
      p.channel = detail::draw_channel(p.distance_pu, a, a, s.solver.real_entries, rng);
    }
    if (p.covariance.size() == 0)
      p.covariance = water_filling(p.channel, detail::kPuTxPower, p.noise_psd * p.total_bandwidth);
  }
  for (SuLink& l : s.links) {
    const SuNode& tx = s.nodes[l.tx];
    const SuNode& rx = s.nodes[l.rx];
    const PuLink& pu = s.pus[tx.pu_id];
    if (l.channel.size() == 0) {
      const double d = std::hypot(tx.x - rx.x, tx.y - rx.y);
      if (d <= 0.0) detail::fail("generate_channels: link " + std::to_string(l.id) + " endpoints coincide");
      Rng rng(mix_seed(seed, 0x10, static_cast<std::uint64_t>(l.id)));
      l.channel = detail::draw_channel(d, a, a, s.solver.real_entries, rng);
    }
    if (l.pu_to_su.size() == 0) {
      Rng rng(mix_seed(seed, 0x20, static_cast<std::uint64_t>(l.id)));
      l.pu_to_su = detail::draw_channel(pu.distance_su_to_pu, a, a, s.solver.real_entries, rng);
    }
    if (l.su_to_pu.size() == 0) {
      Rng rng(mix_seed(seed, 0x30, static_cast<std::uint64_t>(l.id)));
      l.su_to_pu = detail::draw_channel(pu.distance_su_to_pu, a, a, s.solver.real_entries, rng);
    }
  }
  for (PuLink& p : s.pus)
    if (p.has_rho) {
      p.min_rate = p.rho * pu_baseline_rate(p);
      p.min_rate_resolved = true;
    }
  return s;
}

// Desk-scale reproduction of the measurement topology: 15 nodes placed
// uniformly at random, a directed link for every ordered pair within 300 m
// (rejection-sampled until exactly 56 links exist and the three sessions are
// routable), bandwidth 20, power 100, one shared PU at rho = 0.5.
inline Scenario make_paper_scenario(std::uint64_t seed) {
  constexpr int kNodes = 15;
  constexpr int kLinks = 56;
  constexpr double kSide = 900.0;
  constexpr double kRange = 300.0;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(mix_seed(seed, 0x70, attempt));
    Scenario s;
    s.seed = seed;
    s.antennas = 2;
    for (int i = 0; i < kNodes; ++i) {
      SuNode n;
      n.id = i;
      n.x = kSide * rng.uniform();
      n.y = kSide * rng.uniform();
      n.bandwidth_budget = 20.0;
      n.power_budget = 100.0;
      n.power_fraction = 1.0;
      n.pu_id = 0;
      s.nodes.push_back(n);
    }
    int lid = 0;
    for (int i = 0; i < kNodes; ++i)
      for (int k = 0; k < kNodes; ++k) {
        if (i == k) continue;
        const double d = std::hypot(s.nodes[i].x - s.nodes[k].x, s.nodes[i].y - s.nodes[k].y);
        if (d <= kRange) {
          SuLink l;
          l.id = lid++;
          l.tx = i;
          l.rx = k;
          l.t_weight = 0.0;
          s.links.push_back(l);
        }
      }
    if (static_cast<int>(s.links.size()) != kLinks) continue;
    PuLink p;
    p.id = 0;
    p.total_bandwidth = 20.0;
    p.noise_psd = 1.0;
    p.has_rho = true;
    p.rho = 0.5;
    p.distance_pu = 200.0;
    p.distance_su_to_pu = 300.0;
    s.pus.push_back(p);
    s.sessions = {{0, 1, 5}, {1, 7, 12}, {2, 14, 8}};
    try {
      validate_scenario(s);
    } catch (const std::exception&) {
      continue;  // a session endpoint ended up unreachable; redraw positions
    }
    return s;
  }
}

}  // namespace crn
