#pragma once

// Region-scoped redundant coordinators. Each region keeps a roster of active
// coordinators that watch each other and, when fewer than T_min remain,
// promote replacements from the region's own workers.

#include "svirgo/flat_set.hpp"
#include "svirgo/ids.hpp"

#include <functional>
#include <map>
#include <vector>

namespace svirgo {

enum class Health { Healthy, Failed };

struct CoordinatorSet {
  RegionId region;
  std::vector<WorkerId> members;  // every worker of the region, ascending
  FlatSet<WorkerId> active;
  int K = 1;
  int T_min = 1;
  std::map<WorkerId, Health> health;
  std::map<WorkerId, double> metric;
  bool degraded = false;

  bool operator==(const CoordinatorSet&) const = default;
};

// Initial roster: the K lowest-id members, all healthy.
CoordinatorSet make_coordinator_set(RegionId region, std::vector<WorkerId> members, int K,
                                    int T_min);

// Candidate inputs observed inside the region. All in [0, 1] except load,
// which is a raw count normalised by load / (1 + load).
struct CandidateObservation {
  double connectivity = 1.0;
  double load = 0.0;
  double energy = 1.0;
};

struct MetricWeights {
  double connectivity = 0.5;
  double load = 0.3;
  double energy = 0.2;

  bool operator==(const MetricWeights&) const = default;
};

double coordination_metric(const CandidateObservation& obs, const MetricWeights& w);

using AliveFn = std::function<bool(WorkerId)>;

struct MonitorResult {
  CoordinatorSet updated;
  std::vector<WorkerId> failed;  // removed from the roster this round
  int probes = 0;                // peer health checks performed
  int evaluations = 0;           // candidate metric evaluations performed
};

// One monitoring pass. Every alive coordinator checks every peer and scores
// every non-coordinator member. Observations for workers outside the region
// are rejected (InvalidConfig). Throws RegionDead when no coordinator is alive.
MonitorResult monitor_round(const CoordinatorSet& cs, const AliveFn& alive,
                            const std::map<WorkerId, CandidateObservation>& observations,
                            const MetricWeights& weights = {});

// Fewer than T_min healthy coordinators.
bool needs_reselection(const CoordinatorSet& cs);

enum class PromotionMode {
  ToThreshold,  // promote until |active| == T_min
  Single,       // at most one promotion per round
  Eager,        // refill to K
};

struct SelectionResult {
  CoordinatorSet updated;
  std::vector<WorkerId> promoted;
  bool insufficient_candidates = false;
};

// Promotes healthy non-coordinators by descending metric, ties to the lower
// id. Promotes as many as possible and flags the set degraded when the
// candidates run out.
SelectionResult select_replacements(const CoordinatorSet& cs,
                                    PromotionMode mode = PromotionMode::ToThreshold);

// At least one coordinator on the roster is alive.
bool region_live(const CoordinatorSet& cs, const AliveFn& alive);
// Same, judged by the roster's last observed health.
bool region_live(const CoordinatorSet& cs);

// 1 - p^K. Throws DomainError for p outside [0, 1] or K < 1.
double predicted_liveness(double p, int K);

}  // namespace svirgo
