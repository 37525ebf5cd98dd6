#pragma once

// Infrastructure-free dissemination: workers relay leader-authorised
// broadcasts to everything in radio reach, and leaders defer their broadcast
// by a delay that grows with hierarchy distance to the nearest unexecuted goal.

#include "svirgo/message.hpp"
#include "svirgo/rng.hpp"
#include "svirgo/sim_time.hpp"
#include "svirgo/topology.hpp"

#include <set>
#include <vector>

namespace svirgo {

struct DelayParams {
  double alpha = 1.0;    // time per unit of hierarchy distance
  double beta = 0.1;     // time per pending broadcast
  double epsilon = 0.05; // upper bound of the uniform jitter

  // Throws InvalidConfig when a field is negative or not finite.
  void validate() const;
  bool operator==(const DelayParams&) const = default;
};

struct PendingBroadcast {
  MsgId msg;
  SimTime fire_time;
  auto operator<=>(const PendingBroadcast&) const = default;
};

// Per-cluster routing state. It outlives individual leaders so a cluster
// processes each command once even across a leader change.
struct LeaderState {
  ClusterId cluster_id;
  std::set<MsgId> processed_msgs;
  std::set<PendingBroadcast> pending_broadcasts;

  double local_load() const { return static_cast<double>(pending_broadcasts.size()); }
};

enum class WorkerAction { ExecuteLocally, ReportToLeader, BroadcastToReachable };

const char* to_string(WorkerAction a);

// Alive workers of w's region and of every adjacent region, excluding w,
// ascending.
std::vector<WorkerId> reachable_workers(const Topology& topo, WorkerId w);

// Actions a worker takes on receipt. Returns nothing for unknown workers.
std::vector<WorkerAction> worker_on_receive(const Topology& topo, WorkerId w, const Message& m);

// alpha * dist + beta * local_load + U[0, epsilon). Always consumes one draw.
double compute_delay(int dist, double local_load, const DelayParams& params, Rng& rng);

enum class DeferredKind { Drop, DeliverAndSchedule, Schedule, Deliver, Stop };

const char* to_string(DeferredKind k);

struct DeferredOutcome {
  DeferredKind kind = DeferredKind::Drop;
  Message message;                     // copy after visited/executed updates
  std::vector<WorkerId> recipients;    // workers that execute, when delivering
  int distance = -1;                   // min distance to an unexecuted goal
  double delay = 0.0;
  SimTime fire_time;

  bool delivers() const {
    return kind == DeferredKind::Deliver || kind == DeferredKind::DeliverAndSchedule;
  }
  bool schedules() const {
    return kind == DeferredKind::Schedule || kind == DeferredKind::DeliverAndSchedule;
  }
};

// Cluster recipients of a delivery: the targeted alive workers of the
// cluster, or every alive worker when the command names no targets.
std::vector<WorkerId> delivery_recipients(const Topology& topo, ClusterId c, const Message& m);

// Leader-side deferred routing. On Schedule the pending broadcast is recorded
// in `state`; the caller arms the timer at outcome.fire_time.
DeferredOutcome leader_on_receive_deferred(LeaderState& state, const Message& m,
                                           const Topology& topo, const DelayParams& params,
                                           SimTime now, Rng& rng);

enum class BroadcastStatus { Fired, CancelledLeaderDead, Suppressed };

const char* to_string(BroadcastStatus s);

struct BroadcastResult {
  BroadcastStatus status = BroadcastStatus::Fired;
  Message copy;  // hop+1, last_sent = cluster, forward_flag set; only when Fired
};

// Timer expiry for a broadcast scheduled by leader_on_receive_deferred. Clears
// the pending entry whatever the outcome.
BroadcastResult worker_broadcast(LeaderState& state, const Message& scheduled,
                                 SimTime fire_time, bool leader_alive);

}  // namespace svirgo
