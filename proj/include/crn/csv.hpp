#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "crn/baselines.hpp"
#include "crn/dual.hpp"
#include "crn/recovery.hpp"

namespace crn {

// Shortest round-trip decimal form; byte-identical across runs and thread
// counts for equal values.
inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  return out;
}

inline void write_trace_links_csv(const IterationTrace& trace, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "iter,link_id,price,subgrad,W,capacity,load\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    for (int l = 0; l < trace.prices[k].size(); ++l)
      out << k << ',' << l << ',' << format_number(trace.prices[k](l)) << ','
          << format_number(trace.subgradients[k](l)) << ',' << format_number(trace.bandwidths[k](l)) << ','
          << format_number(trace.capacities[k](l)) << ',' << format_number(trace.loads[k](l)) << '\n';
}

inline void write_trace_summary_csv(const IterationTrace& trace, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "iter,utility,total_power,max_pu_violation\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    out << k << ',' << format_number(trace.utilities[k]) << ',' << format_number(trace.total_powers[k]) << ','
        << format_number(trace.max_pu_violations[k]) << '\n';
}

inline void write_solution_links_csv(const FeasibleSolution& sol, const Scenario& s, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "link_id,W,trace_Q,price\n";
  const int nl = static_cast<int>(s.links.size());
  std::vector<double> w(nl, 0.0), tq(nl, 0.0);
  for (const NodeDecision& d : sol.decisions) {
    const SuNode& node = s.nodes[d.node_id];
    for (std::size_t j = 0; j < node.outgoing.size(); ++j) {
      w[node.outgoing[j]] = d.bandwidth[j];
      tq[node.outgoing[j]] = trace_re(d.covariance[j]);
    }
  }
  for (int l = 0; l < nl; ++l)
    out << l << ',' << format_number(w[l]) << ',' << format_number(tq[l]) << ','
        << format_number(sol.prices.u.size() == nl ? sol.prices.u(l) : 0.0) << '\n';
}

inline void write_solution_sessions_csv(const FeasibleSolution& sol, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "session_id,e_f\n";
  for (const SessionFlow& f : sol.flows) out << f.session_id << ',' << format_number(f.demand) << '\n';
}

inline void write_solution_flows_csv(const FeasibleSolution& sol, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "session_id,link_id,x\n";
  for (const SessionFlow& f : sol.flows)
    for (int l = 0; l < f.link_flow.size(); ++l)
      if (f.link_flow(l) != 0.0) out << f.session_id << ',' << l << ',' << format_number(f.link_flow(l)) << '\n';
}

inline void write_feasibility_csv(const FeasibilityReport& rep, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "constraint,violation,worst_entity\n";
  out << "power," << format_number(rep.power_violation) << ',' << rep.worst_power_node << '\n';
  out << "bandwidth," << format_number(rep.bandwidth_violation) << ',' << rep.worst_bandwidth_node << '\n';
  out << "pu_rate," << format_number(rep.pu_violation) << ',' << rep.worst_pu_node << '\n';
  out << "flow_conservation," << format_number(rep.flow_violation) << ',' << rep.worst_flow_node << '\n';
  out << "capacity," << format_number(rep.capacity_violation) << ',' << rep.worst_capacity_link << '\n';
  out << "feasible," << (rep.feasible ? 1 : 0) << ",-1\n";
}

inline void write_sweep_csv(const SweepTable& table, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "alpha,t,seed,utility,power,violation,runtime_s\n";
  for (const SweepRow& r : table.rows)
    out << format_number(r.alpha) << ',' << format_number(r.t_weight) << ',' << r.seed << ','
        << format_number(r.utility) << ',' << format_number(r.total_power) << ','
        << format_number(r.pu_violation_max) << ',' << format_number(r.runtime_s) << '\n';
}

// Markdown companion of the sweep table, for docs.
inline void write_sweep_markdown(const SweepTable& table, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "| alpha | t | seed | utility | power | violation |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const SweepRow& r : table.rows)
    out << "| " << format_number(r.alpha) << " | " << format_number(r.t_weight) << " | " << r.seed << " | "
        << format_number(r.utility) << " | " << format_number(r.total_power) << " | "
        << format_number(r.pu_violation_max) << " |\n";
  if (!table.failures.empty()) {
    out << "\nFailed cells:\n";
    for (const SweepFailure& f : table.failures)
      out << "- alpha=" << format_number(f.alpha) << " t=" << format_number(f.t_weight) << " seed=" << f.seed
          << ": " << f.reason << "\n";
  }
}

}  // namespace crn
