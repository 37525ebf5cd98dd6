// Acceptance checks AC1..AC9. One PASS/FAIL line per criterion; exit status
// is non-zero when any criterion fails.

#include "svirgo/error.hpp"
#include "svirgo/kernel.hpp"
#include "svirgo/metrics.hpp"
#include "svirgo/oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace svirgo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  std::string why;  // first failure

  void fail(const std::string& reason) {
    if (pass) why = reason;
    pass = false;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

HierarchyConfig config(int wpc, int cpr, int rph, int hpd, int domains, int K, int T_min) {
  HierarchyConfig c;
  c.workers_per_cluster = wpc;
  c.clusters_per_region = cpr;
  c.regions_per_hub = rph;
  c.hubs_per_domain = hpd;
  c.domains = domains;
  c.K = K;
  c.T_min = T_min;
  return c;
}

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

Scope random_scope(Rng& rng, const Topology& t) {
  switch (rng.below(5)) {
    case 0: return Scope::cluster(ClusterId(static_cast<std::uint32_t>(rng.below(t.num_clusters()))));
    case 1: return Scope::region(RegionId(static_cast<std::uint32_t>(rng.below(t.num_regions()))));
    case 2: return Scope::hub(HubId(static_cast<std::uint32_t>(rng.below(t.num_hubs()))));
    case 3: return Scope::domain(DomainId(static_cast<std::uint32_t>(rng.below(t.num_domains()))));
    default: return Scope::global();
  }
}

void add_random_commands(Scenario& sc, Rng& rng, int n, double t_lo, double t_hi) {
  const Topology t = scenario_topology(sc);
  for (int i = 0; i < n; ++i) {
    CommandSpec c;
    c.time = t_lo + (t_hi - t_lo) * rng.uniform01();
    c.origin = static_cast<std::uint32_t>(rng.below(t.num_clusters()));
    c.scope = random_scope(rng, t);
    sc.commands.push_back(c);
  }
}

// Generic randomized scenario: random shape, adjacency, strategy, commands,
// optionally a mix of failures.
Scenario random_scenario(std::uint64_t seed, bool with_failures) {
  Rng rng(derive_seed(seed, 0xACCE));
  const int K = pick(rng, 1, 3);
  Scenario sc;
  sc.config = config(pick(rng, K, 4), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 2),
                     pick(rng, 1, 2), K, pick(rng, 1, K));
  sc.config.num_layers = rng.bernoulli(0.8) ? 5 : pick(rng, 2, 4);
  sc.strategy = rng.bernoulli(0.5) ? Strategy::Adjacent : Strategy::Hierarchical;
  sc.routing.literal_root = rng.bernoulli(0.2);
  sc.seed = seed;
  sc.horizon = 80.0;
  sc.delays = {0.2 + rng.uniform01(), 0.1 * rng.uniform01(), 0.05 * rng.uniform01()};
  const std::size_t regions = sc.config.num_regions();
  sc.adjacency = random_connected_adjacency(regions, 0.3 * rng.uniform01(), rng);
  add_random_commands(sc, rng, pick(rng, 1, 4), 1.0, 8.0);
  if (!with_failures) return sc;

  const std::size_t workers = sc.config.num_workers();
  const std::size_t clusters = sc.config.num_clusters();
  for (int i = 0, n = pick(rng, 1, 5); i < n; ++i) {
    FailureSpec f;
    f.time = 0.5 + 10.0 * rng.uniform01();
    switch (rng.below(7)) {
      case 0:
        f.target = TargetKind::Worker;
        f.id = static_cast<std::uint32_t>(rng.below(workers));
        break;
      case 1:
        f.target = TargetKind::Leader;
        f.id = static_cast<std::uint32_t>(rng.below(clusters));
        break;
      case 2:
        f.target = TargetKind::Region;
        f.id = static_cast<std::uint32_t>(rng.below(regions));
        break;
      case 3:
        f.target = TargetKind::Coordinators;
        f.region = static_cast<std::uint32_t>(rng.below(regions));
        f.count = pick(rng, 1, K);
        break;
      case 4:
        f.target = TargetKind::Coordinators;
        f.probability = 0.3 * rng.uniform01();
        break;
      case 5:
        f.action = FailureAction::Jam;
        f.target = TargetKind::LinkClass;
        f.link_class = static_cast<LinkClass>(rng.below(4));
        f.drop = rng.uniform01();
        break;
      default:
        f.action = FailureAction::Recover;
        f.target = TargetKind::Worker;
        f.id = static_cast<std::uint32_t>(rng.below(workers));
        break;
    }
    sc.failures.push_back(f);
  }
  return sc;
}

// --- AC1 -------------------------------------------------------------------

Verdict ac1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const int trials = 100000;
  const double p = 0.1;
  std::string parts;
  for (int K : {1, 3, 5}) {
    Scenario sc;
    sc.config = config(K + 1, 1, 1, 1, 1, K, 1);
    sc.horizon = 1.0;
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Coordinators;
    f.probability = p;
    sc.failures.push_back(f);
    RunOptions opt;
    opt.record_trace = false;
    std::vector<bool> live;
    live.reserve(trials);
    for (int t = 0; t < trials; ++t) {
      sc.seed = derive_seed(20240601, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(t));
      live.push_back(run(sc, opt).region_live.at(0));
    }
    const auto e = liveness_estimate(live, p, K);
    const std::int64_t dead = e.trials - e.live;
    parts += fmt(" K=%d:%.5f(pred %.5f)", K, e.fraction, e.predicted);
    if (K == 1 && std::fabs(e.fraction - 0.9) > 3e-3) v.fail(fmt("K=1 fraction %.5f", e.fraction));
    if (K == 3 && std::fabs(e.fraction - 0.999) > 5e-4) v.fail(fmt("K=3 fraction %.5f", e.fraction));
    if (K == 5 && dead > 1) v.fail(fmt("K=5 had %lld dead trials", static_cast<long long>(dead)));
  }
  const double secs = seconds_since(t0);
  if (secs > 60.0) v.fail(fmt("took %.1fs", secs));
  v.detail = parts.substr(1) + fmt(" (%.1fs)", secs);
  return v;
}

// --- AC2 / AC3 -------------------------------------------------------------

Scenario coordinator_scenario(Rng& rng, std::uint64_t seed, int K, int T_min, int min_workers) {
  Scenario sc;
  const int cpr = pick(rng, 1, 3);
  const int wpc = std::max(1, (min_workers + cpr - 1) / cpr) + pick(rng, 0, 2);
  sc.config = config(wpc, cpr, pick(rng, 1, 4), pick(rng, 1, 2), 1, K, T_min);
  sc.strategy = rng.bernoulli(0.5) ? Strategy::Adjacent : Strategy::Hierarchical;
  sc.seed = seed;
  sc.horizon = 25.0;
  add_random_commands(sc, rng, pick(rng, 0, 2), 1.0, 10.0);
  return sc;
}

Verdict ac2() {
  Verdict v;
  std::int64_t failures_injected = 0, breaches = 0;
  for (int i = 0; i < 1000; ++i) {
    Rng rng(derive_seed(2, static_cast<std::uint64_t>(i)));
    Scenario sc = coordinator_scenario(rng, derive_seed(22, static_cast<std::uint64_t>(i)), 5, 3, 5);
    for (std::uint32_t r = 0; r < sc.config.num_regions(); ++r) {
      const int n = pick(rng, 0, 2);
      // either both at once or spread over two instants
      if (n == 2 && rng.bernoulli(0.5)) {
        for (int k = 0; k < 2; ++k) {
          FailureSpec f;
          f.time = 0.5 + 12.0 * rng.uniform01();
          f.target = TargetKind::Coordinators;
          f.region = r;
          f.count = 1;
          sc.failures.push_back(f);
        }
      } else if (n > 0) {
        FailureSpec f;
        f.time = 0.5 + 12.0 * rng.uniform01();
        f.target = TargetKind::Coordinators;
        f.region = r;
        f.count = n;
        sc.failures.push_back(f);
      }
      failures_injected += n;
    }
    const auto res = run(sc);
    const auto samples = recovery_latency(res.trace);
    breaches += static_cast<std::int64_t>(samples.size());
    if (!samples.empty()) v.fail(fmt("scenario %d: %zu breaches", i, samples.size()));
  }
  v.detail = fmt("1000 scenarios, %lld coordinator failures, %lld breaches",
                  static_cast<long long>(failures_injected), static_cast<long long>(breaches));
  return v;
}

Verdict ac3() {
  Verdict v;
  std::int64_t default_samples = 0, single_samples = 0, worst_single = 0;
  for (int i = 0; i < 300; ++i) {
    const bool single = i % 2 == 1;
    Rng rng(derive_seed(3, static_cast<std::uint64_t>(i)));
    // Single promotion with T_min = K so that refilling takes several rounds.
    const int K = 5;
    const int T_min = single ? pick(rng, 3, 5) : 3;
    Scenario sc = coordinator_scenario(rng, derive_seed(33, static_cast<std::uint64_t>(i)), K, T_min,
                                       K + 3);
    sc.coordinator.single_promotion = single;
    const std::uint32_t region = static_cast<std::uint32_t>(rng.below(sc.config.num_regions()));
    FailureSpec f;
    f.time = 0.5 + 8.0 * rng.uniform01();
    f.target = TargetKind::Coordinators;
    f.region = region;
    f.count = 3;
    sc.failures.push_back(f);
    const auto res = run(sc);
    const auto samples = recovery_latency(res.trace);
    const std::int64_t bound = single ? T_min - (K - 3) : 1;
    if (samples.size() != 1) {
      v.fail(fmt("scenario %d: %zu samples", i, samples.size()));
      continue;
    }
    const auto& s = samples[0];
    if (!s.restored) v.fail(fmt("scenario %d: unrestored", i));
    if (single) {
      ++single_samples;
      worst_single = std::max(worst_single, s.rounds);
      if (s.rounds > bound) v.fail(fmt("scenario %d: %lld rounds > %lld", i,
                                       static_cast<long long>(s.rounds), static_cast<long long>(bound)));
    } else {
      ++default_samples;
      if (s.rounds != 1) v.fail(fmt("scenario %d: %lld rounds", i, static_cast<long long>(s.rounds)));
    }
  }
  v.detail = fmt("default: %lld breaches all restored in 1 round; single-promotion: %lld breaches, worst %lld rounds",
                  static_cast<long long>(default_samples), static_cast<long long>(single_samples),
                  static_cast<long long>(worst_single));
  return v;
}

// --- AC4 -------------------------------------------------------------------

Verdict ac4() {
  Verdict v;
  std::int64_t alg4 = 0, region_kills = 0, jams = 0;
  for (int i = 0; i < 150; ++i) {
    Scenario sc = random_scenario(derive_seed(4, static_cast<std::uint64_t>(i)), true);
    Rng rng(derive_seed(44, static_cast<std::uint64_t>(i)));
    FailureSpec kill;
    kill.time = 1.0 + 5.0 * rng.uniform01();
    kill.target = TargetKind::Region;
    kill.id = static_cast<std::uint32_t>(rng.below(sc.config.num_regions()));
    sc.failures.push_back(kill);
    FailureSpec jam;
    jam.time = 0.5 + 5.0 * rng.uniform01();
    jam.action = FailureAction::Jam;
    jam.target = TargetKind::LinkClass;
    jam.link_class = static_cast<LinkClass>(rng.below(4));
    jam.drop = 0.2 + 0.8 * rng.uniform01();
    sc.failures.push_back(jam);
    region_kills += 1;
    jams += 1;
    const auto res = run(sc);
    alg4 += res.metrics.alg4_records;
    const auto c = containment_check(res.trace);
    if (c != 0) v.fail(fmt("run %d: %lld cross-region alg4 records", i, static_cast<long long>(c)));
  }
  if (alg4 == 0) v.fail("no alg4 records observed");
  v.detail = fmt("150 runs, %lld region kills, %lld jams, %lld alg4 records, 0 cross-region",
                  static_cast<long long>(region_kills), static_cast<long long>(jams),
                  static_cast<long long>(alg4));
  return v;
}

// --- AC5 -------------------------------------------------------------------

Verdict ac5() {
  Verdict v;
  int checked = 0;
  std::size_t max_clusters = 0;
  for (int i = 0; i < 200; ++i) {
    Scenario sc = random_scenario(derive_seed(5, static_cast<std::uint64_t>(i)), false);
    Rng rng(derive_seed(55, static_cast<std::uint64_t>(i)));
    // widen to the 64-cluster limit now and then
    if (i % 10 == 0) sc.config = config(1, 4, 4, 2, 2, 1, 1);
    sc.adjacency = random_connected_adjacency(sc.config.num_regions(), 0.2 * rng.uniform01(), rng);
    sc.commands.clear();
    add_random_commands(sc, rng, pick(rng, 1, 4), 1.0, 6.0);
    max_clusters = std::max(max_clusters, sc.config.num_clusters());
    for (auto s : {Strategy::Adjacent, Strategy::Hierarchical}) {
      sc.strategy = s;
      const auto res = run(sc);
      const auto cmp = oracle_compare(sc, res.trace);
      ++checked;
      if (!cmp.ok()) {
        v.fail(fmt("scenario %d %s: %s", i, to_string(s), cmp.mismatches.front().c_str()));
        continue;
      }
      // no failures: every goal is expected, and observed exactly once
      for (const auto& [id, goals] : res.goals) {
        if (cmp.expected.at(id) != goals) v.fail(fmt("scenario %d: oracle lost goals", i));
      }
      for (const auto& [id, per] : observed_deliveries(res.trace)) {
        for (const auto& [c, n] : per) {
          if (n != 1) v.fail(fmt("scenario %d: cluster %u executed %d times", i, c.value, n));
        }
      }
    }
  }
  v.detail = fmt("%d oracle checks, up to %zu clusters", checked, max_clusters);
  return v;
}

// --- AC6 -------------------------------------------------------------------

Verdict ac6() {
  Verdict v;
  std::int64_t processed = 0;
  for (int i = 0; i < 1200; ++i) {
    const Scenario sc = random_scenario(derive_seed(6, static_cast<std::uint64_t>(i)), i % 3 != 0);
    const auto res = run(sc);
    std::set<std::pair<MsgId, std::uint32_t>> seen;
    for (const auto& r : res.trace) {
      if ((r.comp != Component::Alg2 && r.comp != Component::Alg3) || r.event != "process") continue;
      ++processed;
      const auto visited = r.get_ints("visited");
      std::set<std::int64_t> uniq(visited.begin(), visited.end());
      if (uniq.size() != visited.size()) v.fail(fmt("scenario %d: duplicate visited entry", i));
      if (!seen.insert({*r.msg, *r.cluster}).second) {
        v.fail(fmt("scenario %d: cluster %u processed %s twice", i, *r.cluster, r.msg->str().c_str()));
      }
    }
    for (const auto& [id, per] : observed_deliveries(res.trace)) {
      for (const auto& [c, n] : per) {
        if (n > 1) v.fail(fmt("scenario %d: cluster %u delivered %d times", i, c.value, n));
      }
    }
    if (res.accounting.in_flight != 0) {
      v.fail(fmt("scenario %d: %lld copies in flight", i, static_cast<long long>(res.accounting.in_flight)));
    }
    if (!res.accounting.balanced()) v.fail(fmt("scenario %d: accounting unbalanced", i));
  }
  v.detail = fmt("1200 scenarios, %lld leader processings, no repeats, 0 in flight",
                  static_cast<long long>(processed));
  return v;
}

// --- AC7 -------------------------------------------------------------------

Verdict ac7() {
  Verdict v;
  // hop bound on 5-layer topologies with long region lines
  std::uint32_t worst_hop = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(7, static_cast<std::uint64_t>(i)));
    Scenario sc;
    sc.config = config(pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 6), pick(rng, 1, 3),
                       pick(rng, 1, 3), 1, 1);
    sc.strategy = Strategy::Hierarchical;
    sc.routing.literal_root = rng.bernoulli(0.3);
    sc.seed = static_cast<std::uint64_t>(i);
    sc.adjacency = line_adjacency(sc.config.num_regions());
    add_random_commands(sc, rng, 3, 1.0, 5.0);
    const auto res = run(sc);
    worst_hop = std::max(worst_hop, res.metrics.max_hop);
  }
  if (worst_hop > 8) v.fail(fmt("tree hop %u > 8", worst_hop));

  // region crossings along lines of 2, 4 and 8 regions
  std::vector<std::int64_t> crossings;
  for (int regions : {2, 4, 8}) {
    Scenario sc;
    sc.config = config(2, 1, regions, 1, 1, 1, 1);
    sc.adjacency = line_adjacency(static_cast<std::size_t>(regions));
    CommandSpec c;
    c.time = 1.0;
    c.origin = 0;
    c.scope = Scope::cluster(ClusterId(static_cast<std::uint32_t>(regions - 1)));
    sc.commands.push_back(c);
    const auto res = run(sc);
    std::int64_t x = -1;
    for (const auto& m : res.metrics.messages) x = std::max(x, m.max_region_crossings);
    crossings.push_back(x);
  }
  if (!(crossings[0] < crossings[1] && crossings[1] < crossings[2])) {
    v.fail(fmt("crossings not increasing: %lld %lld %lld", static_cast<long long>(crossings[0]),
               static_cast<long long>(crossings[1]), static_cast<long long>(crossings[2])));
  }

  // paired dominance: tree forwards against physical broadcasts
  int dominated = 0;
  std::int64_t sum_tree = 0, sum_bcast = 0;
  for (int i = 0; i < 20; ++i) {
    Scenario sc = random_scenario(derive_seed(77, static_cast<std::uint64_t>(i)), false);
    sc.config.workers_per_cluster = std::max(2, sc.config.workers_per_cluster);
    sc.config.num_layers = 5;
    sc.strategy = Strategy::Adjacent;
    const auto adj = run(sc);
    sc.strategy = Strategy::Hierarchical;
    const auto hier = run(sc);
    sum_tree += hier.metrics.tree_forwards;
    sum_bcast += adj.metrics.worker_broadcasts;
    if (hier.metrics.tree_forwards <= adj.metrics.worker_broadcasts) {
      ++dominated;
    } else {
      v.fail(fmt("pair %d: %lld tree forwards > %lld broadcasts", i,
                 static_cast<long long>(hier.metrics.tree_forwards),
                 static_cast<long long>(adj.metrics.worker_broadcasts)));
    }
  }
  v.detail = fmt("max tree hop %u; crossings %lld/%lld/%lld; dominance %d/20 (forwards %lld vs broadcasts %lld)",
                  worst_hop, static_cast<long long>(crossings[0]), static_cast<long long>(crossings[1]),
                  static_cast<long long>(crossings[2]), dominated, static_cast<long long>(sum_tree),
                  static_cast<long long>(sum_bcast));
  return v;
}

// --- AC8 -------------------------------------------------------------------

Verdict ac8() {
  Verdict v;
  // alpha as an exact decimal: 0.7 units = 700000000 ticks per distance step
  const std::int64_t alpha_ticks = 700'000'000;
  Scenario sc;
  sc.config = config(2, 2, 3, 1, 1, 1, 1);
  sc.adjacency = line_adjacency(3);
  sc.delays = {0.7, 0.0, 0.0};
  sc.horizon = 40.0;
  for (std::uint32_t origin : {0u, 2u, 5u}) {
    CommandSpec c;
    c.time = 1.0 + origin;
    c.origin = origin;
    c.scope = Scope::global();
    sc.commands.push_back(c);
  }
  const auto res = run(sc);
  std::map<std::pair<std::uint32_t, MsgId>, std::int64_t> fired;
  for (const auto& r : res.trace) {
    if (r.comp == Component::Alg2 && r.event == "broadcast") fired[{*r.cluster, *r.msg}] = r.time.ticks();
  }
  int schedules = 0;
  for (const auto& r : res.trace) {
    if (r.comp != Component::Alg2 || r.event != "schedule") continue;
    ++schedules;
    const std::int64_t recv = r.get_int("recv_ticks");
    const std::int64_t fire = r.get_int("fire_ticks");
    const std::int64_t want = recv + alpha_ticks * r.get_int("dist");
    if (recv != r.time.ticks()) v.fail("recv_ticks differs from record time");
    if (fire != want) {
      v.fail(fmt("fire %lld != %lld", static_cast<long long>(fire), static_cast<long long>(want)));
    }
    auto it = fired.find({*r.cluster, *r.msg});
    if (it != fired.end() && it->second != fire) v.fail("broadcast fired off schedule");
  }
  if (schedules == 0) v.fail("no broadcasts scheduled");
  v.detail = fmt("%d scheduled broadcasts on a 3-region chain match recv + 0.7*dist exactly", schedules);
  return v;
}

// --- AC9 -------------------------------------------------------------------

Verdict ac9() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc;
  sc.config = config(10, 10, 10, 5, 2, 3, 2);
  sc.horizon = 30.0;
  sc.seed = 99;
  Rng rng(909);
  add_random_commands(sc, rng, 6, 1.0, 10.0);
  for (int i = 0; i < 20; ++i) {
    FailureSpec f;
    f.time = 0.5 + 15.0 * rng.uniform01();
    f.target = i % 2 == 0 ? TargetKind::Worker : TargetKind::Leader;
    f.id = static_cast<std::uint32_t>(rng.below(i % 2 == 0 ? 10000 : 1000));
    sc.failures.push_back(f);
  }
  FailureSpec coord;
  coord.time = 3.0;
  coord.target = TargetKind::Coordinators;
  coord.probability = 0.2;
  sc.failures.push_back(coord);

  const fs::path dir = fs::temp_directory_path() / "svirgo_acceptance_ac9";
  fs::create_directories(dir);
  std::vector<std::string> contents;
  std::size_t records = 0;
  for (int k = 0; k < 2; ++k) {
    sc.strategy = Strategy::Adjacent;
    const auto res = run(sc);
    const fs::path p = dir / fmt("trace_%d.jsonl", k);
    {
      std::ofstream os(p, std::ios::binary);
      write_trace(os, res.trace);
    }
    std::ifstream is(p, std::ios::binary);
    contents.emplace_back(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
    records = res.trace.size();
  }
  const double secs = seconds_since(t0);
  if (contents[0] != contents[1]) v.fail("trace files differ");
  if (contents[0].empty()) v.fail("empty trace");
  if (secs > 120.0) v.fail(fmt("took %.1fs", secs));
  v.detail = fmt("10000 workers / 100 regions, %zu records, %zu bytes, identical, %.1fs for two runs",
                  records, contents[0].size(), secs);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> checks = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::cout << name << ' ' << (v.pass ? "PASS" : "FAIL") << ' ' << v.detail;
    if (!v.pass) std::cout << "; first failure: " << v.why;
    std::cout << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
