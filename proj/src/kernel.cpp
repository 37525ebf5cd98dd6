#include "svirgo/kernel.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace svirgo {

const char* to_string(Strategy s) {
  return s == Strategy::Adjacent ? "adjacent" : "hierarchical";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "adjacent") return Strategy::Adjacent;
  if (s == "hierarchical") return Strategy::Hierarchical;
  throw Error(ErrorCode::ScenarioInvalid, "strategy: unknown strategy '" + s + "'");
}

const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::IntraCluster: return "intra_cluster";
    case LinkClass::IntraRegion: return "intra_region";
    case LinkClass::Adjacent: return "adjacent";
    case LinkClass::Tree: return "tree";
  }
  return "?";
}

LinkClass link_class_from_string(const std::string& s) {
  if (s == "intra_cluster") return LinkClass::IntraCluster;
  if (s == "intra_region") return LinkClass::IntraRegion;
  if (s == "adjacent") return LinkClass::Adjacent;
  if (s == "tree") return LinkClass::Tree;
  throw Error(ErrorCode::ScenarioInvalid, "unknown link class '" + s + "'");
}

const char* to_string(FailureAction a) {
  switch (a) {
    case FailureAction::Crash: return "crash";
    case FailureAction::Recover: return "recover";
    case FailureAction::Jam: return "jam";
    case FailureAction::Unjam: return "unjam";
    case FailureAction::LinkDown: return "link_down";
    case FailureAction::LinkUp: return "link_up";
  }
  return "?";
}

const char* to_string(TargetKind t) {
  switch (t) {
    case TargetKind::Worker: return "worker";
    case TargetKind::Leader: return "leader";
    case TargetKind::Region: return "region";
    case TargetKind::Coordinators: return "coordinators";
    case TargetKind::LinkClass: return "link_class";
    case TargetKind::Link: return "link";
  }
  return "?";
}

PromotionMode CoordinatorParams::mode() const {
  if (eager_refill) return PromotionMode::Eager;
  if (single_promotion) return PromotionMode::Single;
  return PromotionMode::ToThreshold;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ScenarioInvalid, field + ": " + msg);
}

std::string strip_code(const Error& e) {
  std::string m = e.what();
  const auto pos = m.find(": ");
  return pos == std::string::npos ? m : m.substr(pos + 2);
}

void check_real(double v, const std::string& field, double lo, double hi) {
  if (!std::isfinite(v) || v < lo || v > hi) {
    invalid(field, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  }
}

std::string scope_string(Scope s) {
  switch (s.kind) {
    case ScopeKind::Cluster: return "cluster:" + std::to_string(s.id);
    case ScopeKind::Region: return "region:" + std::to_string(s.id);
    case ScopeKind::Hub: return "hub:" + std::to_string(s.id);
    case ScopeKind::Domain: return "domain:" + std::to_string(s.id);
    case ScopeKind::Global: return "global";
  }
  return "?";
}

}  // namespace

void Scenario::validate() const {
  try {
    config.validate();
  } catch (const Error& e) {
    const std::string m = strip_code(e);
    const bool coord = m.rfind("K:", 0) == 0 || m.rfind("T_min:", 0) == 0;
    throw Error(ErrorCode::ScenarioInvalid, (coord ? "coordinator." : "topology.") + m);
  }
  try {
    delays.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ScenarioInvalid, strip_code(e));
  }
  const double inf = std::numeric_limits<double>::max();
  check_real(latencies.intra_cluster, "delays.intra_cluster", 0.0, inf);
  check_real(latencies.intra_region, "delays.intra_region", 0.0, inf);
  check_real(latencies.adjacent, "delays.adjacent", 0.0, inf);
  for (std::size_t i = 0; i < latencies.tree.size(); ++i) {
    check_real(latencies.tree[i], "delays.tree[" + std::to_string(i) + "]", 0.0, inf);
  }
  if (!std::isfinite(horizon) || horizon <= 0.0) invalid("horizon", "must be > 0");
  if (!std::isfinite(coordinator.round_period) || coordinator.round_period <= 0.0) {
    invalid("coordinator.round_period", "must be > 0");
  }
  if (coordinator.eager_refill && coordinator.single_promotion) {
    invalid("coordinator.single_promotion", "cannot be combined with eager_refill");
  }
  check_real(coordinator.weights.connectivity, "coordinator.weights.connectivity", 0.0, inf);
  check_real(coordinator.weights.load, "coordinator.weights.load", 0.0, inf);
  check_real(coordinator.weights.energy, "coordinator.weights.energy", 0.0, inf);
  check_real(coordinator.energy, "coordinator.energy", 0.0, 1.0);
  if (routing.max_retries < 0) invalid("strategy.max_retries", "must be >= 0");

  const std::size_t nw = config.num_workers();
  const std::size_t nc = config.num_clusters();
  const std::size_t nr = config.num_regions();
  if (adjacency) {
    for (std::size_t i = 0; i < adjacency->size(); ++i) {
      const auto& [a, b] = (*adjacency)[i];
      const std::string f = "topology.adjacency[" + std::to_string(i) + "]";
      if (a.value >= nr || b.value >= nr) invalid(f, "unknown region");
      if (a == b) invalid(f, "self loop");
    }
  }

  for (std::size_t i = 0; i < failures.size(); ++i) {
    const auto& f = failures[i];
    const std::string p = "failures[" + std::to_string(i) + "]";
    if (!std::isfinite(f.time) || f.time < 0.0 || f.time >= horizon) {
      invalid(p + ".time", "must lie in [0, horizon)");
    }
    const bool crash_like = f.action == FailureAction::Crash || f.action == FailureAction::Recover;
    const bool jam_like = f.action == FailureAction::Jam || f.action == FailureAction::Unjam;
    const bool link_like = f.action == FailureAction::LinkDown || f.action == FailureAction::LinkUp;
    switch (f.target) {
      case TargetKind::Worker:
        if (!crash_like) invalid(p + ".action", "worker targets take crash or recover");
        if (f.id >= nw) invalid(p + ".worker", "unknown worker " + std::to_string(f.id));
        break;
      case TargetKind::Leader:
        if (f.action != FailureAction::Crash) invalid(p + ".action", "leader targets take crash");
        if (f.id >= nc) invalid(p + ".leader", "unknown cluster " + std::to_string(f.id));
        break;
      case TargetKind::Region:
        if (!crash_like) invalid(p + ".action", "region targets take crash or recover");
        if (f.id >= nr) invalid(p + ".region", "unknown region " + std::to_string(f.id));
        break;
      case TargetKind::Coordinators:
        if (f.action != FailureAction::Crash) {
          invalid(p + ".action", "coordinator targets take crash");
        }
        if (f.region && *f.region >= nr) {
          invalid(p + ".coordinators", "unknown region " + std::to_string(*f.region));
        }
        if (f.probability.has_value() == f.count.has_value()) {
          invalid(p, "coordinator targets need exactly one of probability and count");
        }
        if (f.probability) check_real(*f.probability, p + ".probability", 0.0, 1.0);
        if (f.count && *f.count < 0) invalid(p + ".count", "must be >= 0");
        break;
      case TargetKind::LinkClass:
        if (!jam_like) invalid(p + ".action", "link_class targets take jam or unjam");
        check_real(f.drop, p + ".drop", 0.0, 1.0);
        break;
      case TargetKind::Link:
        if (!link_like) invalid(p + ".action", "link targets take link_down or link_up");
        if (f.link.first.value >= nr || f.link.second.value >= nr) {
          invalid(p + ".link", "unknown region");
        }
        if (f.link.first == f.link.second) invalid(p + ".link", "self loop");
        break;
    }
  }

  // Scope resolution needs the id layout, which only depends on the config.
  const Topology probe = build_topology(config, seed);
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& c = commands[i];
    const std::string p = "commands[" + std::to_string(i) + "]";
    if (!std::isfinite(c.time) || c.time < 0.0 || c.time >= horizon) {
      invalid(p + ".time", "must lie in [0, horizon)");
    }
    if (c.origin >= nc) invalid(p + ".origin", "unknown cluster " + std::to_string(c.origin));
    FlatSet<ClusterId> goals;
    try {
      goals = goal_clusters_for_scope(probe, c.scope);
    } catch (const Error& e) {
      invalid(p + ".scope", strip_code(e));
    }
    for (std::uint32_t t : c.targets) {
      if (t >= nw) invalid(p + ".targets", "unknown worker " + std::to_string(t));
      if (!goals.contains(probe.cluster_of(WorkerId(t)))) {
        invalid(p + ".targets", "worker " + std::to_string(t) + " is outside the goal clusters");
      }
    }
  }
}

Topology scenario_topology(const Scenario& s) {
  Topology t = build_topology(s.config, s.seed);
  if (s.adjacency) t.set_adjacency(*s.adjacency);
  return t;
}

std::int64_t SimEvent::copies() const {
  if (kind == EventKind::ScheduledBroadcast) return 1;
  if (kind != EventKind::MessageDelivery) return 0;
  if (purpose == Purpose::Inject) return 1;
  return static_cast<std::int64_t>(receivers.size());
}

namespace {

struct Later {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
    return a.seq > b.seq;
  }
};

}  // namespace

void EventQueue::push(SimEvent e) {
  heap_.push_back(std::move(e));
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

SimEvent EventQueue::pop() {
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  SimEvent e = std::move(heap_.back());
  heap_.pop_back();
  return e;
}

SimEvent inject_failure(const Topology& topo, const FailureSpec& spec, std::size_t index,
                        double horizon, EventQueue& queue) {
  if (!std::isfinite(spec.time) || spec.time < 0.0 || spec.time >= horizon) {
    throw Error(ErrorCode::ScenarioInvalid, "failure time outside [0, horizon)");
  }
  auto unknown = [](const std::string& what) {
    throw Error(ErrorCode::UnknownTarget, what);
  };
  switch (spec.target) {
    case TargetKind::Worker:
      if (!topo.has_worker(WorkerId(spec.id))) unknown("worker " + std::to_string(spec.id));
      break;
    case TargetKind::Leader:
      if (!topo.has_cluster(ClusterId(spec.id))) unknown("cluster " + std::to_string(spec.id));
      break;
    case TargetKind::Region:
      if (!topo.has_region(RegionId(spec.id))) unknown("region " + std::to_string(spec.id));
      break;
    case TargetKind::Coordinators:
      if (spec.region && !topo.has_region(RegionId(*spec.region))) {
        unknown("region " + std::to_string(*spec.region));
      }
      break;
    case TargetKind::LinkClass:
      break;
    case TargetKind::Link:
      if (!topo.has_region(spec.link.first) || !topo.has_region(spec.link.second)) {
        unknown("link");
      }
      break;
  }
  SimEvent e;
  e.fire_time = SimTime::from_units(spec.time);
  e.seq = queue.next_seq();
  switch (spec.action) {
    case FailureAction::Crash: e.kind = EventKind::FailureInjection; break;
    case FailureAction::Recover: e.kind = EventKind::RecoveryInjection; break;
    default: e.kind = EventKind::LinkChange; break;
  }
  e.index = index;
  return e;
}

namespace {

std::int64_t region_crossings(const Topology& topo, const Message& m) {
  std::set<std::uint32_t> regions;
  for (ClusterId c : m.visited_cluster_ids) regions.insert(topo.region_of(c).value);
  return regions.empty() ? 0 : static_cast<std::int64_t>(regions.size()) - 1;
}

struct ParkedEntry {
  ParkedHop hop;
  int attempts = 0;
};

class Sim {
 public:
  Sim(const Scenario& s, const RunOptions& o)
      : sc_(s), opt_(o), topo_(scenario_topology(s)), links_(topo_), rng_(s.seed) {
    for (std::size_t c = 0; c < topo_.num_clusters(); ++c) {
      LeaderState st;
      st.cluster_id = ClusterId(static_cast<std::uint32_t>(c));
      states_.push_back(std::move(st));
    }
    for (std::size_t r = 0; r < topo_.num_regions(); ++r) {
      const RegionId rid(static_cast<std::uint32_t>(r));
      const auto members = topo_.workers_in(rid);
      coords_.push_back(make_coordinator_set(rid, {members.begin(), members.end()},
                                             s.config.K, s.config.T_min));
    }
    if (!o.region_order.empty()) {
      auto sorted = o.region_order;
      std::sort(sorted.begin(), sorted.end());
      bool perm = sorted.size() == topo_.num_regions();
      for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == i;
      if (!perm) throw Error(ErrorCode::InvalidConfig, "region_order is not a permutation");
      order_ = o.region_order;
    } else {
      for (std::size_t r = 0; r < topo_.num_regions(); ++r) {
        order_.push_back(static_cast<std::uint32_t>(r));
      }
    }
    horizon_ = SimTime::from_units(s.horizon);
  }

  RunResult run() {
    for (std::size_t i = 0; i < sc_.failures.size(); ++i) {
      q_.push(inject_failure(topo_, sc_.failures[i], i, sc_.horizon, q_));
    }
    for (std::size_t i = 0; i < sc_.commands.size(); ++i) {
      SimEvent e;
      e.fire_time = SimTime::from_units(sc_.commands[i].time);
      e.seq = q_.next_seq();
      e.kind = EventKind::MessageDelivery;
      e.purpose = Purpose::Inject;
      e.cluster = ClusterId(sc_.commands[i].origin);
      e.index = i;
      acct_.created += 1;
      q_.push(std::move(e));
    }
    schedule_round(1);

    RunResult res;
    while (!q_.empty() && q_.top().fire_time <= horizon_) {
      SimEvent e = q_.pop();
      now_ = e.fire_time;
      seq_ = e.seq;
      handle(e);
      ++res.events_processed;
    }
    for (const auto& e : q_.items()) acct_.in_flight += e.copies();
    acct_.in_flight += static_cast<std::int64_t>(parked_.size());

    const AliveFn alive = [this](WorkerId w) { return topo_.is_alive(w); };
    for (const auto& cs : coords_) res.region_live.push_back(region_live(cs, alive));
    res.metrics = compute_metrics(trace_);
    res.trace = std::move(trace_);
    res.accounting = acct_;
    res.coordinators = coords_;
    res.topology = topo_;
    res.executed = std::move(executed_);
    res.goals = std::move(goals_);
    return res;
  }

 private:
  // --- trace helpers -------------------------------------------------------

  TraceRecord rec(Component c, const char* ev) const {
    TraceRecord r;
    r.time = now_;
    r.seq = seq_;
    r.comp = c;
    r.event = ev;
    return r;
  }

  TraceRecord rec_worker(Component c, const char* ev, WorkerId w) const {
    TraceRecord r = rec(c, ev);
    r.region = topo_.region_of(w).value;
    r.cluster = topo_.cluster_of(w).value;
    r.worker = w.value;
    return r;
  }

  void with_msg(TraceRecord& r, const Message& m) const {
    r.msg = m.id;
    r.hop = m.hop_count;
  }

  void emit(TraceRecord r) {
    if (opt_.record_trace) trace_.push_back(std::move(r));
  }

  void delivery_failure(const char* cause, RegionId region, const Message& m) {
    if (!opt_.record_trace) return;
    TraceRecord r = rec(Component::Kernel, "delivery_failure");
    r.region = region.value;
    with_msg(r, m);
    const AliveFn alive = [this](WorkerId w) { return topo_.is_alive(w); };
    r.with("cause", std::string(cause));
    r.with("region_live", region_live(coords_[region.value], alive));
    emit(std::move(r));
  }

  void drop_record(const char* cause, const Message& m, std::int64_t count,
                   std::optional<WorkerId> w = std::nullopt) {
    if (!opt_.record_trace) return;
    TraceRecord r = w ? rec_worker(Component::Kernel, "drop", *w) : rec(Component::Kernel, "drop");
    with_msg(r, m);
    r.with("cause", std::string(cause));
    r.with("count", count);
    emit(std::move(r));
  }

  // --- transmission --------------------------------------------------------

  void send(Purpose purpose, std::vector<WorkerId> receivers, double latency, LinkClass cls,
            std::shared_ptr<const Message> msg, WorkerId sender, ClusterId cluster,
            NodeRef from = {}, NodeRef to = {}) {
    if (receivers.empty()) return;
    acct_.created += static_cast<std::int64_t>(receivers.size());
    const double q = jam_[static_cast<std::size_t>(cls)];
    if (q > 0.0) {
      std::vector<WorkerId> kept;
      std::int64_t lost = 0;
      for (WorkerId r : receivers) {
        if (rng_.get(Stream::Jam, topo_.region_of(r).value).bernoulli(q)) {
          ++lost;
        } else {
          kept.push_back(r);
        }
      }
      if (lost > 0) {
        acct_.dropped += lost;
        if (opt_.record_trace) {
          TraceRecord r = rec_worker(Component::Kernel, "drop", sender);
          with_msg(r, *msg);
          r.with("cause", std::string("jam"));
          r.with("link_class", std::string(to_string(cls)));
          r.with("count", lost);
          emit(std::move(r));
        }
      }
      receivers = std::move(kept);
      if (receivers.empty()) return;
    }
    SimEvent e;
    e.fire_time = now_ + SimTime::from_units(latency);
    e.seq = q_.next_seq();
    e.kind = EventKind::MessageDelivery;
    e.purpose = purpose;
    e.msg = std::move(msg);
    e.receivers = std::move(receivers);
    e.sender = sender;
    e.cluster = cluster;
    e.from = from;
    e.to = to;
    q_.push(std::move(e));
  }

  // Splits alive receivers from tombstoned ones and books the latter.
  std::vector<WorkerId> live_receivers(const SimEvent& e) {
    std::vector<WorkerId> out;
    std::int64_t dead = 0;
    for (WorkerId w : e.receivers) {
      if (topo_.is_alive(w)) {
        out.push_back(w);
      } else {
        ++dead;
      }
    }
    acct_.dropped += dead;
    acct_.delivered += static_cast<std::int64_t>(out.size());
    if (dead > 0) drop_record("receiver_dead", *e.msg, dead);
    return out;
  }

  // --- adjacent strategy ---------------------------------------------------

  void execute(WorkerId w, const Message& m) {
    if (!executed_by_.insert({w.value, m.id}).second) return;
    TraceRecord r = rec_worker(Component::Alg1, "execute", w);
    with_msg(r, m);
    emit(std::move(r));
  }

  void leader_deliver(Component comp, WorkerId leader, ClusterId c, const Message& m,
                      const std::vector<WorkerId>& recipients) {
    executed_[m.id].insert(c);
    if (opt_.record_trace) {
      TraceRecord r = rec_worker(comp, "deliver", leader);
      with_msg(r, m);
      r.with("recipients", id_list(recipients));
      r.with("crossings", region_crossings(topo_, m));
      emit(std::move(r));
    }
    send(Purpose::LeaderDelivery, recipients, sc_.latencies.intra_cluster,
         LinkClass::IntraCluster, std::make_shared<const Message>(m), leader, c);
  }

  void leader_deferred(WorkerId leader, ClusterId c, const Message& m) {
    Rng& rng = rng_.get(Stream::Delay, topo_.region_of(c).value);
    LeaderState& st = states_[c.value];
    DeferredOutcome out = leader_on_receive_deferred(st, m, topo_, sc_.delays, now_, rng);
    if (out.kind == DeferredKind::Drop) {
      TraceRecord r = rec_worker(Component::Alg2, "drop", leader);
      with_msg(r, m);
      emit(std::move(r));
      // Execution knowledge carried by the duplicate still reaches a waiting
      // broadcast, so it can be suppressed when nothing is left to do.
      auto it = pending_.find({c.value, m.id});
      if (it != pending_.end()) {
        for (ClusterId x : m.executed_cluster_ids) it->second.executed_cluster_ids.insert(x);
        for (ClusterId x : m.visited_cluster_ids) it->second.visited_cluster_ids.insert(x);
      }
      return;
    }
    if (opt_.record_trace) {
      TraceRecord r = rec_worker(Component::Alg2, "process", leader);
      with_msg(r, out.message);
      r.with("outcome", std::string(to_string(out.kind)));
      r.with("visited", id_list(out.message.visited_cluster_ids));
      r.with("executed", id_list(out.message.executed_cluster_ids));
      emit(std::move(r));
    }
    if (out.delivers()) leader_deliver(Component::Alg2, leader, c, out.message, out.recipients);
    if (out.schedules()) {
      if (opt_.record_trace) {
        TraceRecord r = rec_worker(Component::Alg2, "schedule", leader);
        with_msg(r, out.message);
        r.with("dist", static_cast<std::int64_t>(out.distance));
        r.with("delay", out.delay);
        r.with("recv_ticks", now_.ticks());
        r.with("fire_ticks", out.fire_time.ticks());
        emit(std::move(r));
      }
      pending_[{c.value, out.message.id}] = out.message;
      SimEvent e;
      e.fire_time = out.fire_time;
      e.seq = q_.next_seq();
      e.kind = EventKind::ScheduledBroadcast;
      e.sender = leader;
      e.cluster = c;
      e.msg = std::make_shared<const Message>(out.message);
      acct_.created += 1;
      q_.push(std::move(e));
    }
  }

  void relay(WorkerId w, const Message& copy) {
    if (!relayed_.insert({w.value, copy.id}).second) return;
    const auto reach = reachable_workers(topo_, w);
    if (opt_.record_trace) {
      TraceRecord r = rec_worker(Component::Alg1, "relay", w);
      with_msg(r, copy);
      r.with("receivers", static_cast<std::int64_t>(reach.size()));
      emit(std::move(r));
    }
    const ClusterId own_c = topo_.cluster_of(w);
    const RegionId own_r = topo_.region_of(own_c);
    std::vector<WorkerId> same_cluster, same_region, other;
    for (WorkerId x : reach) {
      if (topo_.cluster_of(x) == own_c) same_cluster.push_back(x);
      else if (topo_.region_of(x) == own_r) same_region.push_back(x);
      else other.push_back(x);
    }
    auto msg = std::make_shared<const Message>(copy);
    send(Purpose::WorkerBroadcast, std::move(same_cluster), sc_.latencies.intra_cluster,
         LinkClass::IntraCluster, msg, w, own_c);
    send(Purpose::WorkerBroadcast, std::move(same_region), sc_.latencies.intra_region,
         LinkClass::IntraRegion, msg, w, own_c);
    send(Purpose::WorkerBroadcast, std::move(other), sc_.latencies.adjacent,
         LinkClass::Adjacent, msg, w, own_c);
  }

  void worker_receive(WorkerId w, const std::shared_ptr<const Message>& m) {
    for (WorkerAction a : worker_on_receive(topo_, w, *m)) {
      switch (a) {
        case WorkerAction::ExecuteLocally:
          execute(w, *m);
          break;
        case WorkerAction::ReportToLeader: {
          if (!reported_.insert({w.value, m->id}).second) break;
          const ClusterId c = topo_.cluster_of(w);
          TraceRecord r = rec_worker(Component::Alg1, "report", w);
          with_msg(r, *m);
          emit(std::move(r));
          const auto leader = topo_.roles().holder(layer::kClusterLeader, c.value);
          if (!leader) {
            acct_.created += 1;
            acct_.dropped += 1;
            delivery_failure("leader_vacant", topo_.region_of(c), *m);
            break;
          }
          send(Purpose::Report, {*leader}, sc_.latencies.intra_cluster, LinkClass::IntraCluster,
               m, w, c);
          break;
        }
        case WorkerAction::BroadcastToReachable:
          relay(w, *m);
          break;
      }
    }
  }

  void on_broadcast_timer(const SimEvent& e) {
    const ClusterId c = e.cluster;
    auto it = pending_.find({c.value, e.msg->id});
    Message scheduled = it != pending_.end() ? it->second : *e.msg;
    if (it != pending_.end()) pending_.erase(it);
    const bool leader_alive =
        topo_.is_alive(e.sender) &&
        topo_.roles().holder(layer::kClusterLeader, c.value) == e.sender;
    BroadcastResult res = worker_broadcast(states_[c.value], scheduled, e.fire_time, leader_alive);
    switch (res.status) {
      case BroadcastStatus::Fired: {
        acct_.delivered += 1;
        TraceRecord r = rec_worker(Component::Alg2, "broadcast", e.sender);
        with_msg(r, res.copy);
        emit(std::move(r));
        relay(e.sender, res.copy);
        break;
      }
      case BroadcastStatus::CancelledLeaderDead: {
        acct_.cancelled += 1;
        TraceRecord r = rec(Component::Alg2, "cancelled");
        r.region = topo_.region_of(c).value;
        r.cluster = c.value;
        r.worker = e.sender.value;
        with_msg(r, scheduled);
        emit(std::move(r));
        delivery_failure("leader_lost", topo_.region_of(c), scheduled);
        break;
      }
      case BroadcastStatus::Suppressed: {
        acct_.suppressed += 1;
        TraceRecord r = rec_worker(Component::Alg2, "suppressed", e.sender);
        with_msg(r, scheduled);
        emit(std::move(r));
        break;
      }
    }
  }

  // --- hierarchical strategy -----------------------------------------------

  void tree_send(const TreeHop& h) {
    if (opt_.record_trace) {
      TraceRecord r = rec_worker(Component::Alg3, "forward", h.sender);
      with_msg(r, h.copy);
      r.with("to_worker", static_cast<std::int64_t>(h.receiver.value));
      r.with("from_node", to_string(h.from));
      r.with("to_node", to_string(h.to));
      emit(std::move(r));
    }
    const NodeRef lower = h.from.level < h.to.level ? h.from : h.to;
    const int edge = std::clamp(links_.edge_index(lower), 0, 3);
    send(Purpose::TreeForward, {h.receiver}, sc_.latencies.tree[static_cast<std::size_t>(edge)],
         LinkClass::Tree, std::make_shared<const Message>(h.copy), h.sender,
         topo_.cluster_of(h.sender), h.from, h.to);
  }

  void park(ParkedHop h) {
    if (opt_.record_trace) {
      TraceRecord r = rec_worker(Component::Alg3, "no_route", h.sender);
      with_msg(r, h.copy);
      r.with("to_node", to_string(h.to));
      emit(std::move(r));
    }
    acct_.created += 1;
    parked_.push_back({std::move(h), 0});
  }

  void leader_tree(WorkerId w, const Message& m, NodeRef arrival, std::optional<NodeRef> from) {
    const ClusterId c = topo_.cluster_of(w);
    ImmediateOutcome out = leader_on_receive_immediate(states_[c.value], m, links_, sc_.routing,
                                                       w, arrival, from);
    if (out.leaf_processed) {
      if (out.dropped) {
        TraceRecord r = rec_worker(Component::Alg3, "drop", w);
        with_msg(r, m);
        emit(std::move(r));
      } else if (opt_.record_trace) {
        TraceRecord r = rec_worker(Component::Alg3, "process", w);
        with_msg(r, out.message);
        r.with("visited", id_list(out.message.visited_cluster_ids));
        r.with("executed", id_list(out.message.executed_cluster_ids));
        emit(std::move(r));
      }
      if (out.delivered) leader_deliver(Component::Alg3, w, c, out.message, out.recipients);
    }
    for (const auto& h : out.forwards) tree_send(h);
    for (auto& p : out.parked) park(std::move(p));
  }

  void on_tree_forward(const SimEvent& e) {
    const auto live = live_receivers(e);
    if (live.empty()) return;
    const WorkerId w = live.front();
    const auto holder = links_.holder(e.to);
    if (holder == w) {
      leader_tree(w, *e.msg, e.to, e.from);
      return;
    }
    if (holder) {
      // The role moved while the copy was in transit.
      Message copy = *e.msg;
      copy.hop_count += 1;
      copy.last_sent_cluster_id = topo_.cluster_of(w);
      if (opt_.record_trace) {
        TraceRecord r = rec_worker(Component::Alg3, "redirect", w);
        with_msg(r, copy);
        r.with("to_worker", static_cast<std::int64_t>(holder->value));
        emit(std::move(r));
      }
      tree_send({e.from, e.to, w, *holder, std::move(copy)});
      return;
    }
    park({e.from, e.to, w, *e.msg});
  }

  void retry_parked() {
    // Retried copies may park again; those land in the fresh parked_.
    std::vector<ParkedEntry> pending;
    pending.swap(parked_);
    std::vector<ParkedEntry> keep;
    for (auto& p : pending) {
      ++p.attempts;
      const WorkerId sender = p.hop.sender;
      if (!topo_.is_alive(sender)) {
        acct_.dropped += 1;
        delivery_failure("sender_dead", topo_.region_of(sender), p.hop.copy);
        continue;
      }
      const auto holder = links_.holder(p.hop.to);
      if (holder) {
        acct_.delivered += 1;
        if (opt_.record_trace) {
          TraceRecord r = rec_worker(Component::Alg3, "retry", sender);
          with_msg(r, p.hop.copy);
          r.with("attempt", static_cast<std::int64_t>(p.attempts));
          r.with("to_node", to_string(p.hop.to));
          emit(std::move(r));
        }
        if (*holder == sender) {
          leader_tree(sender, p.hop.copy, p.hop.to, p.hop.from);
        } else {
          Message copy = p.hop.copy;
          copy.hop_count += 1;
          copy.last_sent_cluster_id = topo_.cluster_of(sender);
          tree_send({p.hop.from, p.hop.to, sender, *holder, std::move(copy)});
        }
        continue;
      }
      if (p.attempts >= sc_.routing.max_retries) {
        acct_.dropped += 1;
        delivery_failure("no_route", topo_.region_of(sender), p.hop.copy);
        continue;
      }
      keep.push_back(std::move(p));
    }
    keep.insert(keep.end(), std::make_move_iterator(parked_.begin()),
                std::make_move_iterator(parked_.end()));
    parked_ = std::move(keep);
  }

  // --- commands ------------------------------------------------------------

  void on_inject(const SimEvent& e) {
    const CommandSpec& spec = sc_.commands[e.index];
    const ClusterId c(spec.origin);
    const std::uint32_t seq = next_msg_seq_[c.value]++;
    std::vector<WorkerId> targets;
    for (auto t : spec.targets) targets.emplace_back(t);
    const Message m = new_command(c, seq, goal_clusters_for_scope(topo_, spec.scope),
                                  FlatSet<WorkerId>(std::move(targets)));
    goals_[m.id] = m.goal_cluster_ids;
    executed_[m.id];
    if (opt_.record_trace) {
      TraceRecord r = rec(Component::Kernel, "command");
      r.region = topo_.region_of(c).value;
      r.cluster = c.value;
      with_msg(r, m);
      r.with("scope", scope_string(spec.scope));
      r.with("goals", id_list(m.goal_cluster_ids));
      r.with("targets", id_list(m.target_worker_ids));
      emit(std::move(r));
    }
    const auto leader = topo_.roles().holder(layer::kClusterLeader, c.value);
    if (!leader) {
      acct_.dropped += 1;
      delivery_failure("leader_vacant", topo_.region_of(c), m);
      return;
    }
    acct_.delivered += 1;
    if (sc_.strategy == Strategy::Adjacent) {
      leader_deferred(*leader, c, m);
    } else {
      leader_tree(*leader, m, links_.leaf(c), std::nullopt);
    }
  }

  // --- failures ------------------------------------------------------------

  std::int64_t alive_coordinators(RegionId r) const {
    std::int64_t n = 0;
    for (WorkerId c : coords_[r.value].active) n += topo_.is_alive(c) ? 1 : 0;
    return n;
  }

  void crash(WorkerId w, const char* cause) {
    if (!topo_.is_alive(w)) return;
    const auto vacated = topo_.kill(w);
    const RegionId r = topo_.region_of(w);
    if (!opt_.record_trace) return;
    TraceRecord rec_ = rec_worker(Component::Kernel, "crash", w);
    std::vector<std::int64_t> layers;
    for (const auto& v : vacated) layers.push_back(v.layer);
    rec_.with("cause", std::string(cause));
    rec_.with("roles", layers);
    rec_.with("coordinator", coords_[r.value].active.contains(w));
    rec_.with("alive_coordinators", alive_coordinators(r));
    rec_.with("t_min", static_cast<std::int64_t>(sc_.config.T_min));
    emit(std::move(rec_));
  }

  void recover(WorkerId w) {
    if (topo_.is_alive(w)) return;
    topo_.revive(w);
    emit(rec_worker(Component::Kernel, "recover", w));
  }

  void on_failure(const SimEvent& e) {
    const FailureSpec& f = sc_.failures[e.index];
    switch (f.target) {
      case TargetKind::Worker:
        if (f.action == FailureAction::Crash) crash(WorkerId(f.id), "worker");
        else recover(WorkerId(f.id));
        break;
      case TargetKind::Leader: {
        const auto h = topo_.roles().holder(layer::kClusterLeader, f.id);
        if (h) {
          crash(*h, "leader");
        } else {
          TraceRecord r = rec(Component::Kernel, "crash_noop");
          r.cluster = f.id;
          emit(std::move(r));
        }
        break;
      }
      case TargetKind::Region:
        for (WorkerId w : topo_.workers_in(RegionId(f.id))) {
          if (f.action == FailureAction::Crash) crash(w, "region");
          else recover(w);
        }
        break;
      case TargetKind::Coordinators: {
        std::vector<std::uint32_t> regions;
        if (f.region) {
          regions.push_back(*f.region);
        } else {
          for (std::size_t r = 0; r < topo_.num_regions(); ++r) {
            regions.push_back(static_cast<std::uint32_t>(r));
          }
        }
        for (std::uint32_t r : regions) {
          Rng& rng = rng_.get(Stream::Failure, r);
          std::vector<WorkerId> pool;
          for (WorkerId c : coords_[r].active) {
            if (topo_.is_alive(c)) pool.push_back(c);
          }
          std::vector<WorkerId> victims;
          if (f.probability) {
            for (WorkerId c : pool) {
              if (rng.bernoulli(*f.probability)) victims.push_back(c);
            }
          } else {
            rng.shuffle(pool);
            const auto n = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(*f.count));
            victims.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
            std::sort(victims.begin(), victims.end());
          }
          for (WorkerId v : victims) crash(v, "coordinator");
        }
        break;
      }
      case TargetKind::LinkClass: {
        jam_[static_cast<std::size_t>(f.link_class)] =
            f.action == FailureAction::Jam ? f.drop : 0.0;
        TraceRecord r = rec(Component::Kernel, f.action == FailureAction::Jam ? "jam" : "unjam");
        r.with("link_class", std::string(to_string(f.link_class)));
        r.with("drop", f.action == FailureAction::Jam ? f.drop : 0.0);
        emit(std::move(r));
        break;
      }
      case TargetKind::Link: {
        if (f.action == FailureAction::LinkDown) {
          topo_.remove_edge(f.link.first, f.link.second);
        } else {
          topo_.add_edge(f.link.first, f.link.second);
        }
        TraceRecord r = rec(Component::Kernel, to_string(f.action));
        r.with("link", std::vector<std::int64_t>{f.link.first.value, f.link.second.value});
        emit(std::move(r));
        break;
      }
    }
  }

  // --- maintenance ---------------------------------------------------------

  void schedule_round(std::uint32_t k) {
    const SimTime t = SimTime::from_units(sc_.coordinator.round_period * k);
    if (t > horizon_) return;
    SimEvent e;
    e.fire_time = t;
    e.seq = q_.next_seq();
    e.kind = EventKind::MaintenanceRound;
    e.round = k;
    q_.push(std::move(e));
  }

  std::map<WorkerId, CandidateObservation> observe(const CoordinatorSet& cs) const {
    std::map<WorkerId, CandidateObservation> obs;
    for (WorkerId m : cs.members) {
      if (cs.active.contains(m) || !topo_.is_alive(m)) continue;
      const ClusterId c = topo_.cluster_of(m);
      const auto peers = topo_.workers_in(c);
      std::size_t alive = 0;
      for (WorkerId p : peers) alive += (p != m && topo_.is_alive(p)) ? 1 : 0;
      CandidateObservation o;
      o.connectivity = peers.size() > 1 ? static_cast<double>(alive) / (peers.size() - 1) : 1.0;
      o.load = topo_.roles().holder(layer::kClusterLeader, c.value) == m
                   ? states_[c.value].local_load()
                   : 0.0;
      o.energy = sc_.coordinator.energy;
      obs.emplace(m, o);
    }
    return obs;
  }

  void maintain_region(std::uint32_t r, std::uint32_t round) {
    CoordinatorSet& cs = coords_[r];
    const AliveFn alive = [this](WorkerId w) { return topo_.is_alive(w); };
    const auto c_before = static_cast<std::int64_t>(cs.active.size());
    auto round_record = [&](const char* status, std::int64_t c_after,
                            const std::vector<WorkerId>& removed,
                            const std::vector<WorkerId>& promoted, int probes, int evals) {
      if (!opt_.record_trace) return;
      TraceRecord rr = rec(Component::Alg4, "round");
      rr.region = r;
      rr.with("round", static_cast<std::int64_t>(round));
      rr.with("c_before", c_before);
      rr.with("c_after", c_after);
      rr.with("removed", id_list(removed));
      rr.with("promoted", id_list(promoted));
      rr.with("probes", static_cast<std::int64_t>(probes));
      rr.with("evaluations", static_cast<std::int64_t>(evals));
      rr.with("src_region", static_cast<std::int64_t>(r));
      rr.with("dst_region", static_cast<std::int64_t>(r));
      rr.with("status", std::string(status));
      rr.with("t_min", static_cast<std::int64_t>(cs.T_min));
      emit(std::move(rr));
    };

    if (!region_live(cs, alive)) {
      round_record("dead", 0, {}, {}, 0, 0);
      return;
    }
    MonitorResult mon = monitor_round(cs, alive, observe(cs), sc_.coordinator.weights);
    CoordinatorSet next = std::move(mon.updated);
    std::vector<WorkerId> promoted;
    bool insufficient = false;
    if (needs_reselection(next)) {
      SelectionResult sel = select_replacements(next, sc_.coordinator.mode());
      next = std::move(sel.updated);
      promoted = std::move(sel.promoted);
      insufficient = sel.insufficient_candidates;
    } else {
      next.degraded = false;
    }
    for (WorkerId w : mon.failed) {
      TraceRecord rr = rec_worker(Component::Alg4, "remove", w);
      rr.region = r;
      rr.with("src_region", static_cast<std::int64_t>(r));
      rr.with("dst_region", static_cast<std::int64_t>(topo_.region_of(w).value));
      emit(std::move(rr));
    }
    for (WorkerId w : promoted) {
      TraceRecord rr = rec_worker(Component::Alg4, "promote", w);
      rr.with("src_region", static_cast<std::int64_t>(r));
      rr.with("dst_region", static_cast<std::int64_t>(topo_.region_of(w).value));
      if (auto m = cs.metric.find(w); m != cs.metric.end()) rr.with("metric", m->second);
      emit(std::move(rr));
    }
    cs = std::move(next);
    round_record(insufficient ? "degraded" : "ok", static_cast<std::int64_t>(cs.active.size()),
                 mon.failed, promoted, mon.probes, mon.evaluations);
  }

  void reelect_vacant() {
    const int top = sc_.config.num_layers;
    for (int l = layer::kClusterLeader; l <= top; ++l) {
      std::size_t count = 0;
      switch (l) {
        case layer::kClusterLeader: count = topo_.num_clusters(); break;
        case layer::kRegionalHub: count = topo_.num_regions(); break;
        case layer::kLocalGlobal: count = topo_.num_hubs(); break;
        default: count = topo_.num_domains(); break;
      }
      for (std::size_t s = 0; s < count; ++s) {
        const auto scope = static_cast<std::uint32_t>(s);
        if (topo_.roles().holder(l, scope)) continue;
        const auto cands = role_candidates(topo_, l, scope);
        if (cands.empty()) continue;
        topo_.set_roles(reelect_role(topo_, l, scope));
        if (opt_.record_trace) {
          const WorkerId w = *topo_.roles().holder(l, scope);
          TraceRecord r = rec_worker(Component::Kernel, "rebind", w);
          r.with("layer", static_cast<std::int64_t>(l));
          r.with("scope", static_cast<std::int64_t>(scope));
          emit(std::move(r));
        }
      }
    }
  }

  void on_round(const SimEvent& e) {
    for (std::uint32_t r : order_) maintain_region(r, e.round);
    reelect_vacant();
    if (!parked_.empty()) retry_parked();
    schedule_round(e.round + 1);
  }

  // --- dispatch ------------------------------------------------------------

  void handle(const SimEvent& e) {
    switch (e.kind) {
      case EventKind::MessageDelivery:
        switch (e.purpose) {
          case Purpose::Inject:
            on_inject(e);
            break;
          case Purpose::LeaderDelivery:
            for (WorkerId w : live_receivers(e)) execute(w, *e.msg);
            break;
          case Purpose::Report: {
            const auto live = live_receivers(e);
            if (live.empty()) {
              delivery_failure("leader_dead", topo_.region_of(e.cluster), *e.msg);
              break;
            }
            const WorkerId leader = live.front();
            if (topo_.roles().holder(layer::kClusterLeader, e.cluster.value) != leader) {
              // Reached the worker, but it no longer leads the cluster.
              delivery_failure("not_leader", topo_.region_of(e.cluster), *e.msg);
              break;
            }
            leader_deferred(leader, e.cluster, *e.msg);
            break;
          }
          case Purpose::WorkerBroadcast:
            for (WorkerId w : live_receivers(e)) worker_receive(w, e.msg);
            break;
          case Purpose::TreeForward:
            on_tree_forward(e);
            break;
        }
        break;
      case EventKind::ScheduledBroadcast:
        on_broadcast_timer(e);
        break;
      case EventKind::MaintenanceRound:
        on_round(e);
        break;
      case EventKind::FailureInjection:
      case EventKind::RecoveryInjection:
      case EventKind::LinkChange:
        on_failure(e);
        break;
    }
  }

  const Scenario& sc_;
  RunOptions opt_;
  Topology topo_;
  TreeLinks links_;
  RngStreams rng_;
  EventQueue q_;
  SimTime horizon_;
  SimTime now_;
  std::uint64_t seq_ = 0;
  std::vector<std::uint32_t> order_;

  std::vector<LeaderState> states_;
  std::vector<CoordinatorSet> coords_;
  std::array<double, 4> jam_{};
  std::set<std::pair<std::uint32_t, MsgId>> executed_by_;
  std::set<std::pair<std::uint32_t, MsgId>> reported_;
  std::set<std::pair<std::uint32_t, MsgId>> relayed_;
  std::map<std::pair<std::uint32_t, MsgId>, Message> pending_;
  std::vector<ParkedEntry> parked_;
  std::map<std::uint32_t, std::uint32_t> next_msg_seq_;

  Accounting acct_;
  TraceLog trace_;
  std::map<MsgId, FlatSet<ClusterId>> executed_;
  std::map<MsgId, FlatSet<ClusterId>> goals_;
};

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  Sim sim(scenario, options);
  return sim.run();
}

}  // namespace svirgo
