#include "svirgo/adjacent.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svirgo {

void DelayParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string("delays.") + name + ": must be finite and >= 0");
    }
  };
  check(alpha, "alpha");
  check(beta, "beta");
  check(epsilon, "epsilon");
}

const char* to_string(WorkerAction a) {
  switch (a) {
    case WorkerAction::ExecuteLocally: return "execute";
    case WorkerAction::ReportToLeader: return "report";
    case WorkerAction::BroadcastToReachable: return "relay";
  }
  return "?";
}

const char* to_string(DeferredKind k) {
  switch (k) {
    case DeferredKind::Drop: return "drop";
    case DeferredKind::DeliverAndSchedule: return "deliver_schedule";
    case DeferredKind::Schedule: return "schedule";
    case DeferredKind::Deliver: return "deliver";
    case DeferredKind::Stop: return "stop";
  }
  return "?";
}

const char* to_string(BroadcastStatus s) {
  switch (s) {
    case BroadcastStatus::Fired: return "broadcast";
    case BroadcastStatus::CancelledLeaderDead: return "cancelled_leader_dead";
    case BroadcastStatus::Suppressed: return "suppressed";
  }
  return "?";
}

std::vector<WorkerId> reachable_workers(const Topology& topo, WorkerId w) {
  std::vector<WorkerId> out;
  if (!topo.has_worker(w)) return out;
  const RegionId home = topo.region_of(w);
  auto add_region = [&](RegionId r) {
    for (WorkerId x : topo.workers_in(r)) {
      if (x != w && topo.is_alive(x)) out.push_back(x);
    }
  };
  add_region(home);
  for (RegionId n : topo.neighbors(home)) add_region(n);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<WorkerAction> worker_on_receive(const Topology& topo, WorkerId w, const Message& m) {
  std::vector<WorkerAction> actions;
  if (!topo.has_worker(w)) return actions;
  const ClusterId own = topo.cluster_of(w);
  if (m.target_worker_ids.contains(w)) actions.push_back(WorkerAction::ExecuteLocally);
  if (!m.visited_cluster_ids.contains(own) && m.last_sent_cluster_id != own) {
    actions.push_back(WorkerAction::ReportToLeader);
  }
  if (m.forward_flag && m.last_sent_cluster_id == own) {
    actions.push_back(WorkerAction::BroadcastToReachable);
  }
  return actions;
}

double compute_delay(int dist, double local_load, const DelayParams& params, Rng& rng) {
  if (dist < 0 || dist > 4) throw Error(ErrorCode::DomainError, "distance outside [0, 4]");
  const double jitter = params.epsilon * rng.uniform01();
  return params.alpha * dist + params.beta * local_load + jitter;
}

std::vector<WorkerId> delivery_recipients(const Topology& topo, ClusterId c, const Message& m) {
  std::vector<WorkerId> out;
  for (WorkerId w : topo.workers_in(c)) {
    if (!topo.is_alive(w)) continue;
    if (m.target_worker_ids.empty() || m.target_worker_ids.contains(w)) out.push_back(w);
  }
  return out;
}

DeferredOutcome leader_on_receive_deferred(LeaderState& state, const Message& m,
                                           const Topology& topo, const DelayParams& params,
                                           SimTime now, Rng& rng) {
  DeferredOutcome out;
  const ClusterId self = state.cluster_id;
  if (state.processed_msgs.contains(m.id) || m.visited_cluster_ids.contains(self)) {
    out.kind = DeferredKind::Drop;
    out.message = m;
    return out;
  }
  state.processed_msgs.insert(m.id);
  out.message = m;
  Message& msg = out.message;
  msg.visited_cluster_ids.insert(self);

  bool delivered = false;
  if (msg.goal_cluster_ids.contains(self)) {
    out.recipients = delivery_recipients(topo, self, msg);
    msg.executed_cluster_ids.insert(self);
    delivered = true;
  }

  const auto remaining = unexecuted_goals(msg);
  if (remaining.empty()) {
    out.kind = delivered ? DeferredKind::Deliver : DeferredKind::Stop;
    return out;
  }

  int dist = std::numeric_limits<int>::max();
  for (ClusterId g : remaining) dist = std::min(dist, hierarchy_distance(topo, self, g));
  out.distance = dist;
  out.delay = compute_delay(dist, state.local_load(), params, rng);
  out.fire_time = now + SimTime::from_units(out.delay);
  state.pending_broadcasts.insert({msg.id, out.fire_time});
  out.kind = delivered ? DeferredKind::DeliverAndSchedule : DeferredKind::Schedule;
  return out;
}

BroadcastResult worker_broadcast(LeaderState& state, const Message& scheduled,
                                 SimTime fire_time, bool leader_alive) {
  state.pending_broadcasts.erase({scheduled.id, fire_time});
  BroadcastResult out;
  if (!leader_alive) {
    out.status = BroadcastStatus::CancelledLeaderDead;
    return out;
  }
  // Late check: a copy with nothing left to execute is not re-broadcast.
  if (unexecuted_goals(scheduled).empty()) {
    out.status = BroadcastStatus::Suppressed;
    return out;
  }
  out.status = BroadcastStatus::Fired;
  out.copy = scheduled;
  out.copy.hop_count += 1;
  out.copy.last_sent_cluster_id = state.cluster_id;
  out.copy.forward_flag = true;
  return out;
}

}  // namespace svirgo
