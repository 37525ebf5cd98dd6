#include "svirgo/coordinators.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <cmath>

namespace svirgo {

CoordinatorSet make_coordinator_set(RegionId region, std::vector<WorkerId> members, int K,
                                    int T_min) {
  std::sort(members.begin(), members.end());
  CoordinatorSet cs;
  cs.region = region;
  cs.members = std::move(members);
  cs.K = K;
  cs.T_min = T_min;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(K, 0)), cs.members.size());
  for (std::size_t i = 0; i < n; ++i) {
    cs.active.insert(cs.members[i]);
    cs.health[cs.members[i]] = Health::Healthy;
  }
  return cs;
}

double coordination_metric(const CandidateObservation& obs, const MetricWeights& w) {
  const double load_norm = obs.load / (1.0 + obs.load);
  return w.connectivity * obs.connectivity + w.load * (1.0 - load_norm) + w.energy * obs.energy;
}

MonitorResult monitor_round(const CoordinatorSet& cs, const AliveFn& alive,
                            const std::map<WorkerId, CandidateObservation>& observations,
                            const MetricWeights& weights) {
  auto is_member = [&](WorkerId w) {
    return std::binary_search(cs.members.begin(), cs.members.end(), w);
  };
  for (const auto& [w, obs] : observations) {
    if (!is_member(w)) {
      throw Error(ErrorCode::InvalidConfig,
                  "observation for worker " + std::to_string(w.value) + " outside region " +
                      std::to_string(cs.region.value));
    }
  }

  std::vector<WorkerId> monitors;
  for (WorkerId c : cs.active) {
    if (alive(c)) monitors.push_back(c);
  }
  if (monitors.empty()) {
    throw Error(ErrorCode::RegionDead, "region " + std::to_string(cs.region.value));
  }

  MonitorResult res;
  res.updated = cs;
  CoordinatorSet& out = res.updated;
  const int n_monitors = static_cast<int>(monitors.size());
  res.probes = n_monitors * (static_cast<int>(cs.active.size()) - 1);

  for (WorkerId c : cs.active) {
    if (!alive(c)) {
      out.health[c] = Health::Failed;
      out.active.erase(c);
      res.failed.push_back(c);
    } else {
      out.health[c] = Health::Healthy;
    }
  }

  int candidates = 0;
  for (WorkerId r : cs.members) {
    if (cs.active.contains(r)) continue;
    ++candidates;
    if (!alive(r)) {
      out.health[r] = Health::Failed;
      out.metric.erase(r);
      continue;
    }
    out.health[r] = Health::Healthy;
    auto it = observations.find(r);
    const CandidateObservation obs = it == observations.end() ? CandidateObservation{} : it->second;
    out.metric[r] = coordination_metric(obs, weights);
  }
  res.evaluations = n_monitors * candidates;
  return res;
}

bool needs_reselection(const CoordinatorSet& cs) {
  int healthy = 0;
  for (WorkerId c : cs.active) {
    auto it = cs.health.find(c);
    if (it == cs.health.end() || it->second == Health::Healthy) ++healthy;
  }
  return healthy < cs.T_min;
}

SelectionResult select_replacements(const CoordinatorSet& cs, PromotionMode mode) {
  SelectionResult res;
  res.updated = cs;
  CoordinatorSet& out = res.updated;

  std::vector<std::pair<double, WorkerId>> ranked;
  for (WorkerId r : cs.members) {
    if (cs.active.contains(r)) continue;
    auto h = cs.health.find(r);
    if (h != cs.health.end() && h->second == Health::Failed) continue;
    auto m = cs.metric.find(r);
    ranked.emplace_back(m == cs.metric.end() ? 0.0 : m->second, r);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  const int target = mode == PromotionMode::Eager ? cs.K : cs.T_min;
  int need = target - static_cast<int>(out.active.size());
  if (mode == PromotionMode::Single) need = std::min(need, 1);
  for (const auto& [score, r] : ranked) {
    if (need <= 0) break;
    out.active.insert(r);
    out.health[r] = Health::Healthy;
    out.metric.erase(r);
    res.promoted.push_back(r);
    --need;
  }
  res.insufficient_candidates = need > 0;
  out.degraded = res.insufficient_candidates;
  return res;
}

bool region_live(const CoordinatorSet& cs, const AliveFn& alive) {
  return std::any_of(cs.active.begin(), cs.active.end(), [&](WorkerId c) { return alive(c); });
}

bool region_live(const CoordinatorSet& cs) {
  return std::any_of(cs.active.begin(), cs.active.end(), [&](WorkerId c) {
    auto it = cs.health.find(c);
    return it == cs.health.end() || it->second == Health::Healthy;
  });
}

double predicted_liveness(double p, int K) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "p must lie in [0, 1]");
  if (K < 1) throw Error(ErrorCode::DomainError, "K must be >= 1");
  return 1.0 - std::pow(p, K);
}

}  // namespace svirgo
