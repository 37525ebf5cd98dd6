#pragma once

// Brute-force delivery oracle. It ignores timing entirely: all failures are
// applied up front, then reachability from each command's origin is found
// by breadth-first search, over regions that still hold an alive worker for
// the adjacent strategy, or over tree nodes that can still have a holder for
// the hierarchical one.

#include "svirgo/kernel.hpp"
#include "svirgo/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace svirgo {

inline constexpr std::size_t kOracleMaxClusters = 64;

// Throws ScenarioInvalid when the scenario is outside the static model: more
// than 64 clusters, jamming, randomised or role-dependent failure targets,
// or a failure less than one maintenance period before the first command.
void check_oracle_applicable(const Scenario& s);

// Goal clusters each command should reach, keyed by the id the kernel will
// assign (per-origin sequence in issue order).
std::map<MsgId, FlatSet<ClusterId>> oracle_expected(const Scenario& s);

// Leader deliveries per message and cluster, read from a trace.
std::map<MsgId, std::map<ClusterId, int>> observed_deliveries(const TraceLog& trace);

struct OracleResult {
  std::map<MsgId, FlatSet<ClusterId>> expected;
  std::map<MsgId, FlatSet<ClusterId>> observed;
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

OracleResult oracle_compare(const Scenario& s, const TraceLog& trace);

}  // namespace svirgo
