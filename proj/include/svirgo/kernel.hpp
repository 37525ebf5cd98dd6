#pragma once

// Discrete-event engine. One run owns a topology, per-cluster leader state,
// per-region coordinator rosters and a totally ordered event queue; every
// state change happens inside an event handler.

#include "svirgo/adjacent.hpp"
#include "svirgo/coordinators.hpp"
#include "svirgo/hierarchical.hpp"
#include "svirgo/metrics.hpp"
#include "svirgo/topology.hpp"
#include "svirgo/trace.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace svirgo {

enum class Strategy { Adjacent, Hierarchical };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

enum class LinkClass { IntraCluster = 0, IntraRegion = 1, Adjacent = 2, Tree = 3 };

const char* to_string(LinkClass c);
LinkClass link_class_from_string(const std::string& s);

struct LinkLatencies {
  double intra_cluster = 0.1;
  double intra_region = 0.2;
  double adjacent = 0.5;
  std::array<double, 4> tree{1.0, 1.0, 1.0, 1.0};  // by edge index, leaf edge first

  bool operator==(const LinkLatencies&) const = default;
};

enum class FailureAction { Crash, Recover, Jam, Unjam, LinkDown, LinkUp };
enum class TargetKind { Worker, Leader, Region, Coordinators, LinkClass, Link };

const char* to_string(FailureAction a);
const char* to_string(TargetKind t);

struct FailureSpec {
  double time = 0.0;
  FailureAction action = FailureAction::Crash;
  TargetKind target = TargetKind::Worker;
  std::uint32_t id = 0;                 // worker, cluster (Leader) or region
  std::optional<std::uint32_t> region;  // Coordinators: one region, or every region when unset
  std::optional<double> probability;    // Coordinators: independent kill chance per coordinator
  std::optional<int> count;             // Coordinators: kill this many, chosen at random
  LinkClass link_class = LinkClass::Adjacent;
  double drop = 1.0;                    // Jam: per-receiver loss probability
  RegionEdge link{};                    // LinkDown / LinkUp

  bool operator==(const FailureSpec&) const = default;
};

struct CommandSpec {
  double time = 0.0;
  std::uint32_t origin = 0;  // cluster whose leader issues the command
  Scope scope;
  std::vector<std::uint32_t> targets;  // worker ids; empty means every worker of each goal cluster

  bool operator==(const CommandSpec&) const = default;
};

struct CoordinatorParams {
  double round_period = 1.0;
  bool eager_refill = false;
  bool single_promotion = false;
  MetricWeights weights;
  double energy = 1.0;

  PromotionMode mode() const;
  bool operator==(const CoordinatorParams&) const = default;
};

struct Scenario {
  HierarchyConfig config;
  std::optional<std::vector<RegionEdge>> adjacency;
  DelayParams delays;
  LinkLatencies latencies;
  Strategy strategy = Strategy::Adjacent;
  RoutingOptions routing;
  std::vector<FailureSpec> failures;
  std::vector<CommandSpec> commands;
  std::uint64_t seed = 1;
  double horizon = 100.0;
  CoordinatorParams coordinator;

  // Throws ScenarioInvalid with the offending field.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

// Build the scenario's starting topology (adjacency override applied).
Topology scenario_topology(const Scenario& s);

// Conservation ledger over message copies. A copy is one receiver of one
// transmission, one scheduled broadcast, one injected command or one parked
// tree hop.
struct Accounting {
  std::int64_t created = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t suppressed = 0;
  std::int64_t cancelled = 0;
  std::int64_t in_flight = 0;

  bool balanced() const {
    return created == delivered + dropped + suppressed + cancelled + in_flight;
  }
};

struct RunOptions {
  bool record_trace = true;
  // Order in which maintenance visits regions; empty means ascending.
  std::vector<std::uint32_t> region_order;
};

struct RunResult {
  TraceLog trace;
  MetricsReport metrics;
  Accounting accounting;
  std::vector<bool> region_live;  // at the horizon, by RegionId
  std::vector<CoordinatorSet> coordinators;
  Topology topology;  // final state
  std::map<MsgId, FlatSet<ClusterId>> executed;  // clusters that ran leader delivery
  std::map<MsgId, FlatSet<ClusterId>> goals;
  std::uint64_t events_processed = 0;
};

RunResult run(const Scenario& scenario, const RunOptions& options = {});

enum class EventKind {
  MessageDelivery,
  ScheduledBroadcast,
  MaintenanceRound,
  FailureInjection,
  RecoveryInjection,
  LinkChange,
};

enum class Purpose { Inject, LeaderDelivery, Report, WorkerBroadcast, TreeForward };

struct SimEvent {
  SimTime fire_time;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::MessageDelivery;

  // MessageDelivery / ScheduledBroadcast
  Purpose purpose = Purpose::Inject;
  std::shared_ptr<const Message> msg;
  std::vector<WorkerId> receivers;
  WorkerId sender;
  ClusterId cluster;
  NodeRef from;
  NodeRef to;
  // Inject, FailureInjection, RecoveryInjection, LinkChange: index into the scenario
  std::size_t index = 0;
  // MaintenanceRound
  std::uint32_t round = 0;

  // Copies this event carries for the conservation ledger.
  std::int64_t copies() const;
};

// Min-queue on (fire_time, seq). Kept as a plain heap so pending events can
// be inspected at the horizon.
class EventQueue {
 public:
  void push(SimEvent e);
  SimEvent pop();
  const SimEvent& top() const { return heap_.front(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const std::vector<SimEvent>& items() const { return heap_; }
  std::uint64_t next_seq() { return next_seq_++; }

 private:
  std::vector<SimEvent> heap_;
  std::uint64_t next_seq_ = 0;
};

// The event a failure spec turns into. Throws UnknownTarget for ids that do
// not resolve in `topo` and ScenarioInvalid for a time past the horizon.
SimEvent inject_failure(const Topology& topo, const FailureSpec& spec, std::size_t index,
                        double horizon, EventQueue& queue);

}  // namespace svirgo
