#include "svirgo/metrics.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

namespace svirgo {

namespace {

struct MsgAccumulator {
  MessageMetrics m;
  std::set<std::int64_t> goal_set;
  std::set<std::uint32_t> delivered;
  SimTime last_goal_delivery;
  bool seen_command = false;
};

}  // namespace

MetricsReport compute_metrics(const TraceLog& trace) {
  MetricsReport out;
  std::map<MsgId, MsgAccumulator> msgs;

  for (const auto& r : trace) {
    if (r.msg) {
      auto& acc = msgs[*r.msg];
      acc.m.id = *r.msg;
      if (r.hop) {
        acc.m.max_hop = std::max(acc.m.max_hop, *r.hop);
        out.max_hop = std::max(out.max_hop, *r.hop);
      }
      if (r.comp == Component::Kernel && r.event == "command") {
        acc.seen_command = true;
        acc.m.issued = r.time;
        for (auto g : r.get_ints("goals")) acc.goal_set.insert(g);
        acc.m.goals = acc.goal_set.size();
      }
      if ((r.comp == Component::Alg2 || r.comp == Component::Alg3) && r.event == "deliver" &&
          r.cluster) {
        if (!acc.delivered.insert(*r.cluster).second) {
          ++acc.m.duplicate_deliveries;
        } else if (acc.goal_set.contains(*r.cluster)) {
          ++acc.m.executed;
          acc.last_goal_delivery = std::max(acc.last_goal_delivery, r.time);
        }
        acc.m.max_region_crossings =
            std::max(acc.m.max_region_crossings, r.get_int("crossings"));
      }
    }

    switch (r.comp) {
      case Component::Alg1:
        if (r.event == "relay") ++out.worker_broadcasts;
        else if (r.event == "report") ++out.reports;
        else if (r.event == "execute") ++out.executions;
        break;
      case Component::Alg2:
        if (r.event == "broadcast") ++out.leader_broadcasts;
        else if (r.event == "suppressed") ++out.suppressed;
        else if (r.event == "cancelled") ++out.cancelled;
        break;
      case Component::Alg3:
        if (r.event == "forward") ++out.tree_forwards;
        break;
      case Component::Alg4:
        ++out.alg4_records;
        if (r.event == "round") {
          ++out.maintenance_rounds;
          out.max_probes = std::max(out.max_probes, r.get_int("probes"));
          out.max_evaluations = std::max(out.max_evaluations, r.get_int("evaluations"));
        }
        break;
      case Component::Kernel:
        if (r.event == "drop") {
          out.drops += std::max<std::int64_t>(1, r.get_int("count", 1));
        } else if (r.event == "delivery_failure") {
          ++out.delivery_failures;
          if (r.get_bool("region_live")) ++out.failures_in_live_regions;
        }
        break;
    }
  }

  for (auto& [id, acc] : msgs) {
    if (!acc.seen_command) continue;
    if (acc.m.goals > 0 && acc.m.executed == acc.m.goals) {
      acc.m.delivery_latency = (acc.last_goal_delivery - acc.m.issued).units();
    }
    out.messages.push_back(acc.m);
  }
  out.recovery = recovery_latency(trace);
  out.cross_region_alg4 = containment_check(trace);
  return out;
}

std::vector<RecoverySample> recovery_latency(const TraceLog& trace) {
  struct Open {
    std::int64_t rounds = 0;
  };
  std::map<std::uint32_t, Open> open;
  std::vector<RecoverySample> out;

  for (const auto& r : trace) {
    if (!r.region) continue;
    const std::uint32_t region = *r.region;
    if (r.comp == Component::Kernel && r.event == "crash" && r.get_bool("coordinator")) {
      if (r.get_int("alive_coordinators") < r.get_int("t_min") && !open.contains(region)) {
        open[region] = {};
      }
      continue;
    }
    if (r.comp == Component::Alg4 && r.event == "round") {
      auto it = open.find(region);
      if (it == open.end()) {
        // A round can itself leave the roster short when candidates run out.
        if (r.get_string("status") != "dead" && r.get_int("c_after") < r.get_int("t_min")) {
          open[region] = {};
        }
        continue;
      }
      ++it->second.rounds;
      if (r.get_string("status") != "dead" && r.get_int("c_after") >= r.get_int("t_min")) {
        out.push_back({RegionId(region), it->second.rounds, true});
        open.erase(it);
      }
    }
  }
  for (const auto& [region, o] : open) out.push_back({RegionId(region), o.rounds, false});
  return out;
}

std::int64_t containment_check(const TraceLog& trace) {
  std::int64_t violations = 0;
  for (const auto& r : trace) {
    if (r.comp != Component::Alg4) continue;
    const auto* src = r.find("src_region");
    const auto* dst = r.find("dst_region");
    if (src == nullptr || dst == nullptr) continue;
    if (r.get_int("src_region") != r.get_int("dst_region")) ++violations;
  }
  return violations;
}

LivenessEstimate liveness_estimate(const std::vector<bool>& outcomes, double p, int K) {
  if (outcomes.empty()) throw Error(ErrorCode::DomainError, "liveness estimate needs a trial");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "p must lie in [0, 1]");
  if (K < 1) throw Error(ErrorCode::DomainError, "K must be >= 1");
  LivenessEstimate e;
  e.trials = static_cast<std::int64_t>(outcomes.size());
  e.live = std::count(outcomes.begin(), outcomes.end(), true);
  e.fraction = static_cast<double>(e.live) / static_cast<double>(e.trials);
  e.predicted = 1.0 - std::pow(p, K);
  e.sigma = std::sqrt(e.predicted * (1.0 - e.predicted) / static_cast<double>(e.trials));
  e.ci_low = e.predicted - 3.0 * e.sigma;
  e.ci_high = e.predicted + 3.0 * e.sigma;
  e.within_ci = e.fraction >= e.ci_low && e.fraction <= e.ci_high;
  return e;
}

void write_metrics_csv(std::ostream& os, const MetricsReport& m) {
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return std::string(buf);
  };
  os << "metric,scope,value\n";
  auto row = [&](const char* name, const std::string& scope, const std::string& value) {
    os << name << ',' << scope << ',' << value << '\n';
  };
  row("leader_broadcasts", "run", std::to_string(m.leader_broadcasts));
  row("worker_broadcasts", "run", std::to_string(m.worker_broadcasts));
  row("tree_forwards", "run", std::to_string(m.tree_forwards));
  row("reports", "run", std::to_string(m.reports));
  row("executions", "run", std::to_string(m.executions));
  row("suppressed", "run", std::to_string(m.suppressed));
  row("cancelled", "run", std::to_string(m.cancelled));
  row("drops", "run", std::to_string(m.drops));
  row("delivery_failures", "run", std::to_string(m.delivery_failures));
  row("failures_in_live_regions", "run", std::to_string(m.failures_in_live_regions));
  row("max_hop", "run", std::to_string(m.max_hop));
  row("maintenance_rounds", "run", std::to_string(m.maintenance_rounds));
  row("alg4_records", "run", std::to_string(m.alg4_records));
  row("cross_region_alg4", "run", std::to_string(m.cross_region_alg4));
  row("max_probes", "run", std::to_string(m.max_probes));
  row("max_evaluations", "run", std::to_string(m.max_evaluations));
  for (const auto& msg : m.messages) {
    const std::string scope = "msg:" + msg.id.str();
    row("goals", scope, std::to_string(msg.goals));
    row("executed", scope, std::to_string(msg.executed));
    row("max_hop", scope, std::to_string(msg.max_hop));
    row("region_crossings", scope, std::to_string(msg.max_region_crossings));
    row("duplicate_deliveries", scope, std::to_string(msg.duplicate_deliveries));
    row("delivery_latency", scope,
        msg.delivery_latency ? real(*msg.delivery_latency) : std::string("NA"));
  }
  for (const auto& s : m.recovery) {
    const std::string scope = "region:" + std::to_string(s.region.value);
    row(s.restored ? "recovery_rounds" : "recovery_unrestored_rounds", scope,
        std::to_string(s.rounds));
  }
}

}  // namespace svirgo
