#pragma once

// Quantities derived from a trace. Everything here is a pure function of
// the records it is given.

#include "svirgo/ids.hpp"
#include "svirgo/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace svirgo {

struct MessageMetrics {
  MsgId id;
  SimTime issued;
  std::size_t goals = 0;
  std::size_t executed = 0;  // distinct goal clusters with a delivery
  std::optional<double> delivery_latency;  // last goal delivery minus issue time, once all goals ran
  std::uint32_t max_hop = 0;
  std::int64_t max_region_crossings = 0;
  std::int64_t duplicate_deliveries = 0;
};

struct RecoverySample {
  RegionId region;
  std::int64_t rounds = 0;
  bool restored = true;

  bool operator==(const RecoverySample&) const = default;
};

struct MetricsReport {
  std::vector<MessageMetrics> messages;
  std::int64_t leader_broadcasts = 0;  // alg2 broadcasts authorised by leaders
  std::int64_t worker_broadcasts = 0;  // alg1 relays, each a physical broadcast
  std::int64_t tree_forwards = 0;      // alg3 worker-to-worker transmissions
  std::int64_t reports = 0;
  std::int64_t executions = 0;         // worker-level executions
  std::int64_t suppressed = 0;
  std::int64_t cancelled = 0;
  std::int64_t drops = 0;
  std::int64_t delivery_failures = 0;
  std::int64_t failures_in_live_regions = 0;
  std::uint32_t max_hop = 0;
  std::vector<RecoverySample> recovery;
  std::int64_t alg4_records = 0;
  std::int64_t cross_region_alg4 = 0;
  std::int64_t maintenance_rounds = 0;
  std::int64_t max_probes = 0;
  std::int64_t max_evaluations = 0;
};

MetricsReport compute_metrics(const TraceLog& trace);

// One sample per interval in which a region's alive coordinators dropped
// below T_min: the maintenance rounds until the roster is back at T_min, or
// an unrestored sample if the trace ends first.
std::vector<RecoverySample> recovery_latency(const TraceLog& trace);

// alg4 records whose source and destination regions differ.
std::int64_t containment_check(const TraceLog& trace);

struct LivenessEstimate {
  std::int64_t trials = 0;
  std::int64_t live = 0;
  double fraction = 0.0;
  double predicted = 0.0;
  double sigma = 0.0;  // binomial standard error at the predicted value
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool within_ci = false;
};

// `outcomes` holds region_live at the horizon for each trial. The interval
// is the predicted value plus or minus three standard errors.
// Throws DomainError when there are no trials.
LivenessEstimate liveness_estimate(const std::vector<bool>& outcomes, double p, int K);

// Flat table with header `metric,scope,value`.
void write_metrics_csv(std::ostream& os, const MetricsReport& m);

}  // namespace svirgo
