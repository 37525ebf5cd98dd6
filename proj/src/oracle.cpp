#include "svirgo/oracle.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

namespace svirgo {

namespace {

[[noreturn]] void not_applicable(const std::string& msg) {
  throw Error(ErrorCode::ScenarioInvalid, "oracle: " + msg);
}

// Id arithmetic straight from the configuration.
struct Layout {
  std::size_t wpc, cpr, rph, hpd, domains;
  std::size_t workers, clusters, regions, hubs;

  explicit Layout(const HierarchyConfig& c)
      : wpc(c.workers_per_cluster), cpr(c.clusters_per_region), rph(c.regions_per_hub),
        hpd(c.hubs_per_domain), domains(c.domains) {
    hubs = hpd * domains;
    regions = hubs * rph;
    clusters = regions * cpr;
    workers = clusters * wpc;
  }
  std::size_t region_of_cluster(std::size_t c) const { return c / cpr; }
  std::size_t hub_of_region(std::size_t r) const { return r / rph; }
  std::size_t domain_of_hub(std::size_t h) const { return h / hpd; }
};

struct StaticState {
  std::vector<char> alive;                 // by worker
  std::set<std::pair<std::size_t, std::size_t>> edges;  // region pairs, low first
};

StaticState apply_failures(const Scenario& s, const Layout& L) {
  StaticState st;
  st.alive.assign(L.workers, 1);
  const auto adj = s.adjacency ? *s.adjacency : grid_adjacency(L.regions);
  for (const auto& [a, b] : adj) {
    st.edges.insert({std::min(a.value, b.value), std::max(a.value, b.value)});
  }
  std::vector<std::size_t> idx(s.failures.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return SimTime::from_units(s.failures[a].time) < SimTime::from_units(s.failures[b].time);
  });
  for (std::size_t i : idx) {
    const FailureSpec& f = s.failures[i];
    const char v = f.action == FailureAction::Recover ? 1 : 0;
    switch (f.target) {
      case TargetKind::Worker:
        st.alive[f.id] = v;
        break;
      case TargetKind::Region:
        for (std::size_t w = f.id * L.cpr * L.wpc; w < (f.id + 1) * L.cpr * L.wpc; ++w) {
          st.alive[w] = v;
        }
        break;
      case TargetKind::Link: {
        const auto e = std::make_pair<std::size_t, std::size_t>(
            std::min(f.link.first.value, f.link.second.value),
            std::max(f.link.first.value, f.link.second.value));
        if (f.action == FailureAction::LinkDown) st.edges.erase(e);
        else st.edges.insert(e);
        break;
      }
      default:
        break;
    }
  }
  return st;
}

bool cluster_has_alive(const StaticState& st, const Layout& L, std::size_t c) {
  for (std::size_t w = c * L.wpc; w < (c + 1) * L.wpc; ++w) {
    if (st.alive[w]) return true;
  }
  return false;
}

FlatSet<ClusterId> adjacent_reach(const Scenario& s, const Layout& L, const StaticState& st,
                                  std::size_t origin) {
  std::vector<char> region_ok(L.regions, 0);
  for (std::size_t c = 0; c < L.clusters; ++c) {
    if (cluster_has_alive(st, L, c)) region_ok[L.region_of_cluster(c)] = 1;
  }
  (void)s;
  std::vector<std::vector<std::size_t>> nbr(L.regions);
  for (const auto& [a, b] : st.edges) {
    nbr[a].push_back(b);
    nbr[b].push_back(a);
  }
  std::vector<char> seen(L.regions, 0);
  std::deque<std::size_t> q;
  const std::size_t start = L.region_of_cluster(origin);
  seen[start] = 1;
  q.push_back(start);
  while (!q.empty()) {
    const std::size_t r = q.front();
    q.pop_front();
    for (std::size_t n : nbr[r]) {
      if (!seen[n] && region_ok[n]) {
        seen[n] = 1;
        q.push_back(n);
      }
    }
  }
  std::vector<ClusterId> out;
  for (std::size_t c = 0; c < L.clusters; ++c) {
    if (seen[L.region_of_cluster(c)] && cluster_has_alive(st, L, c)) {
      out.emplace_back(static_cast<std::uint32_t>(c));
    }
  }
  return FlatSet<ClusterId>(std::move(out));
}

// Tree nodes are numbered per level; a node is present when something below
// it can hold the role.
FlatSet<ClusterId> tree_reach(const Scenario& s, const Layout& L, const StaticState& st,
                              std::size_t origin) {
  const int top = s.config.num_layers;
  // present[level - 2][id]; level top + 1 is the root.
  std::vector<std::vector<char>> present(static_cast<std::size_t>(top));
  std::vector<std::size_t> count = {L.clusters, L.regions, L.hubs, L.domains};
  auto parent_id = [&](int level, std::size_t id) -> std::size_t {
    switch (level) {
      case 2: return L.region_of_cluster(id);
      case 3: return L.hub_of_region(id);
      case 4: return L.domain_of_hub(id);
      default: return 0;
    }
  };
  present[0].assign(L.clusters, 0);
  for (std::size_t c = 0; c < L.clusters; ++c) present[0][c] = cluster_has_alive(st, L, c);
  for (int level = 3; level <= top + 1; ++level) {
    const std::size_t n = level == top + 1 ? 1 : count[static_cast<std::size_t>(level - 2)];
    present[static_cast<std::size_t>(level - 2)].assign(n, 0);
  }
  for (int level = 2; level <= top; ++level) {
    const auto& below = present[static_cast<std::size_t>(level - 2)];
    auto& above = present[static_cast<std::size_t>(level - 1)];
    for (std::size_t id = 0; id < below.size(); ++id) {
      if (!below[id]) continue;
      const std::size_t p = level == top ? 0 : parent_id(level, id);
      above[p] = 1;
    }
  }

  // Walk up from the origin while the chain is present, then mark every
  // present descendant of each reached ancestor.
  std::vector<ClusterId> out;
  if (!present[0][origin]) return FlatSet<ClusterId>{};
  std::size_t id = origin;
  int reached_level = 2;
  std::size_t reached_id = origin;
  for (int level = 2; level <= top; ++level) {
    const std::size_t p = level == top ? 0 : parent_id(level, id);
    if (!present[static_cast<std::size_t>(level - 1)][p]) break;
    id = p;
    reached_level = level + 1;
    reached_id = p;
  }
  for (std::size_t c = 0; c < L.clusters; ++c) {
    if (!present[0][c]) continue;
    // Chain from c up to reached_level must be present and end at reached_id.
    std::size_t x = c;
    bool ok = true;
    for (int level = 2; level < reached_level; ++level) {
      const std::size_t p = level == top ? 0 : parent_id(level, x);
      if (!present[static_cast<std::size_t>(level - 1)][p]) {
        ok = false;
        break;
      }
      x = p;
    }
    if (ok && x == reached_id) out.emplace_back(static_cast<std::uint32_t>(c));
  }
  return FlatSet<ClusterId>(std::move(out));
}

FlatSet<ClusterId> scope_goals(const Layout& L, Scope scope) {
  std::vector<ClusterId> out;
  for (std::size_t c = 0; c < L.clusters; ++c) {
    const std::size_t r = L.region_of_cluster(c);
    const std::size_t h = L.hub_of_region(r);
    const std::size_t d = L.domain_of_hub(h);
    bool in = false;
    switch (scope.kind) {
      case ScopeKind::Cluster: in = c == scope.id; break;
      case ScopeKind::Region: in = r == scope.id; break;
      case ScopeKind::Hub: in = h == scope.id; break;
      case ScopeKind::Domain: in = d == scope.id; break;
      case ScopeKind::Global: in = true; break;
    }
    if (in) out.emplace_back(static_cast<std::uint32_t>(c));
  }
  return FlatSet<ClusterId>(std::move(out));
}

}  // namespace

void check_oracle_applicable(const Scenario& s) {
  const Layout L(s.config);
  if (L.clusters > kOracleMaxClusters) {
    not_applicable(std::to_string(L.clusters) + " clusters exceed the limit of " +
                   std::to_string(kOracleMaxClusters));
  }
  double first_command = std::numeric_limits<double>::infinity();
  for (const auto& c : s.commands) first_command = std::min(first_command, c.time);
  for (std::size_t i = 0; i < s.failures.size(); ++i) {
    const auto& f = s.failures[i];
    const std::string p = "failures[" + std::to_string(i) + "]";
    if (f.target == TargetKind::LinkClass) not_applicable(p + ": jamming is not modelled");
    if (f.target == TargetKind::Coordinators || f.target == TargetKind::Leader) {
      not_applicable(p + ": only worker, region and link targets are modelled");
    }
    if (!(f.time + s.coordinator.round_period < first_command)) {
      not_applicable(p + ": must precede the first command by more than round_period");
    }
  }
}

std::map<MsgId, FlatSet<ClusterId>> oracle_expected(const Scenario& s) {
  check_oracle_applicable(s);
  const Layout L(s.config);
  const StaticState st = apply_failures(s, L);

  std::vector<std::size_t> order(s.commands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return SimTime::from_units(s.commands[a].time) < SimTime::from_units(s.commands[b].time);
  });
  std::map<std::uint32_t, std::uint32_t> next_seq;
  std::map<MsgId, FlatSet<ClusterId>> out;
  for (std::size_t i : order) {
    const CommandSpec& c = s.commands[i];
    const MsgId id{ClusterId(c.origin), next_seq[c.origin]++};
    const FlatSet<ClusterId> goals = scope_goals(L, c.scope);
    const FlatSet<ClusterId> reach = s.strategy == Strategy::Adjacent
                                         ? adjacent_reach(s, L, st, c.origin)
                                         : tree_reach(s, L, st, c.origin);
    std::vector<ClusterId> hit;
    for (ClusterId g : goals) {
      if (reach.contains(g)) hit.push_back(g);
    }
    out[id] = FlatSet<ClusterId>(std::move(hit));
  }
  return out;
}

std::map<MsgId, std::map<ClusterId, int>> observed_deliveries(const TraceLog& trace) {
  std::map<MsgId, std::map<ClusterId, int>> out;
  for (const auto& r : trace) {
    if (!r.msg) continue;
    if (r.comp == Component::Kernel && r.event == "command") out[*r.msg];
    if ((r.comp == Component::Alg2 || r.comp == Component::Alg3) && r.event == "deliver" &&
        r.cluster) {
      ++out[*r.msg][ClusterId(*r.cluster)];
    }
  }
  return out;
}

OracleResult oracle_compare(const Scenario& s, const TraceLog& trace) {
  OracleResult res;
  res.expected = oracle_expected(s);
  const auto seen = observed_deliveries(trace);
  for (const auto& [id, counts] : seen) {
    std::vector<ClusterId> cl;
    for (const auto& [c, n] : counts) {
      cl.push_back(c);
      if (n > 1) {
        res.mismatches.push_back(id.str() + ": cluster " + std::to_string(c.value) +
                                 " executed " + std::to_string(n) + " times");
      }
    }
    res.observed[id] = FlatSet<ClusterId>(std::move(cl));
  }
  auto list = [](const std::vector<ClusterId>& v) {
    std::string s;
    for (ClusterId c : v) s += (s.empty() ? "" : ",") + std::to_string(c.value);
    return s;
  };
  for (const auto& [id, want] : res.expected) {
    auto it = res.observed.find(id);
    const FlatSet<ClusterId> got = it == res.observed.end() ? FlatSet<ClusterId>{} : it->second;
    if (it == res.observed.end()) {
      res.mismatches.push_back(id.str() + ": no command record in trace");
    }
    const auto missing = want.difference(got);
    const auto extra = got.difference(want);
    if (!missing.empty()) {
      res.mismatches.push_back(id.str() + ": missing clusters " + list(missing.items()));
    }
    if (!extra.empty()) {
      res.mismatches.push_back(id.str() + ": unexpected clusters " + list(extra.items()));
    }
  }
  for (const auto& [id, got] : res.observed) {
    if (!res.expected.contains(id)) res.mismatches.push_back(id.str() + ": unknown message");
  }
  return res;
}

}  // namespace svirgo
