#include "helpers.hpp"

#include "svirgo/error.hpp"
#include "svirgo/kernel.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace svirgo;
using testutil::count_events;

namespace {

std::string trace_text(const TraceLog& log) {
  std::ostringstream os;
  write_trace(os, log);
  return os.str();
}

Scenario coordinated(Strategy s) {
  auto c = testutil::small_config(3, 2, 2, 2, 1);
  c.K = 3;
  c.T_min = 2;
  auto sc = testutil::base_scenario(c, s, 11);
  sc.horizon = 30.0;
  return sc;
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("event queue orders by time then sequence") {
    EventQueue q;
    auto ev = [&](double t) {
      SimEvent e;
      e.fire_time = SimTime::from_units(t);
      e.seq = q.next_seq();
      return e;
    };
    q.push(ev(2.0));
    q.push(ev(1.0));
    q.push(ev(2.0));
    q.push(ev(0.5));
    std::vector<std::pair<std::int64_t, std::uint64_t>> order;
    while (!q.empty()) {
      auto e = q.pop();
      order.emplace_back(e.fire_time.ticks(), e.seq);
    }
    CHECK(order == std::vector<std::pair<std::int64_t, std::uint64_t>>{
                       {500'000'000, 3}, {1'000'000'000, 1}, {2'000'000'000, 0}, {2'000'000'000, 2}});
  }

  TEST_CASE("no stimulus leaves only maintenance rounds") {
    auto sc = coordinated(Strategy::Adjacent);
    sc.horizon = 5.0;
    const auto res = run(sc);
    for (const auto& r : res.trace) {
      CHECK(r.comp == Component::Alg4);
      CHECK(r.event == "round");
    }
    // rounds at t = 1..5 for 4 regions
    CHECK(res.trace.size() == 20);
    CHECK(res.accounting.created == 0);
    CHECK(res.metrics.cross_region_alg4 == 0);
  }

  TEST_CASE("own-cluster command delivers at hop zero") {
    for (auto s : {Strategy::Adjacent, Strategy::Hierarchical}) {
      auto sc = coordinated(s);
      sc.commands.push_back(testutil::command(1.0, 2, Scope::cluster(ClusterId(2))));
      const auto res = run(sc);
      std::size_t delivers = 0;
      for (const auto& r : res.trace) {
        if (r.event == "deliver") {
          ++delivers;
          CHECK(r.hop == 0u);
          CHECK(r.cluster == 2u);
        }
      }
      CHECK(delivers == 1);
      CHECK(res.accounting.balanced());
      CHECK(res.accounting.in_flight == 0);
    }
  }

  TEST_CASE("global command reaches every goal with balanced accounting") {
    for (auto s : {Strategy::Adjacent, Strategy::Hierarchical}) {
      auto sc = coordinated(s);
      sc.commands.push_back(testutil::command(1.0, 0, Scope::global()));
      sc.commands.push_back(testutil::command(2.0, 5, Scope::hub(HubId(1))));
      const auto res = run(sc);
      for (const auto& [id, goals] : res.goals) CHECK(res.executed.at(id) == goals);
      CHECK(res.accounting.balanced());
      CHECK(res.accounting.in_flight == 0);
      // every worker of a goal cluster executes once per command
      CHECK(res.metrics.executions == 24 + 12);
    }
  }

  TEST_CASE("runs are deterministic") {
    auto sc = coordinated(Strategy::Adjacent);
    sc.commands.push_back(testutil::command(1.0, 0, Scope::global()));
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Coordinators;
    f.probability = 0.4;
    sc.failures.push_back(f);
    const auto a = run(sc), b = run(sc);
    CHECK(trace_text(a.trace) == trace_text(b.trace));
    sc.seed = 12;
    CHECK(trace_text(run(sc).trace) != trace_text(a.trace));
  }

  TEST_CASE("maintenance region order does not change outcomes") {
    auto sc = coordinated(Strategy::Hierarchical);
    sc.commands.push_back(testutil::command(1.5, 0, Scope::global()));
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Coordinators;
    f.count = 2;
    sc.failures.push_back(f);
    const auto a = run(sc);
    RunOptions opt;
    opt.region_order = {3, 1, 2, 0};
    const auto b = run(sc, opt);
    CHECK(a.executed == b.executed);
    CHECK(a.region_live == b.region_live);
    CHECK(a.metrics.recovery.size() == b.metrics.recovery.size());
    std::multiset<std::string> ra, rb;
    for (const auto& r : a.trace) ra.insert(to_json_line(r).substr(to_json_line(r).find("\"comp\"")));
    for (const auto& r : b.trace) rb.insert(to_json_line(r).substr(to_json_line(r).find("\"comp\"")));
    CHECK(ra == rb);
  }

  TEST_CASE("leader crash is followed by a rebind") {
    auto sc = coordinated(Strategy::Adjacent);
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Leader;
    f.id = 1;
    sc.failures.push_back(f);
    sc.commands.push_back(testutil::command(2.0, 0, Scope::global()));
    const auto res = run(sc);
    bool rebound = false;
    for (const auto& r : res.trace) {
      if (r.comp == Component::Kernel && r.event == "rebind" && r.get_int("layer") == 2 &&
          r.get_int("scope") == 1) {
        rebound = true;
        CHECK(r.worker == 4u);
      }
    }
    CHECK(rebound);
    CHECK(res.topology.roles().holder(layer::kClusterLeader, 1) == WorkerId(4));
    CHECK(res.executed.begin()->second.size() == 8);
  }

  TEST_CASE("region kill leaves the region dead") {
    auto sc = coordinated(Strategy::Adjacent);
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Region;
    f.id = 2;
    sc.failures.push_back(f);
    const auto res = run(sc);
    CHECK(res.region_live == std::vector<bool>{true, true, false, true});
    REQUIRE(res.metrics.recovery.size() == 1);
    CHECK_FALSE(res.metrics.recovery[0].restored);
    CHECK(res.metrics.cross_region_alg4 == 0);
  }

  TEST_CASE("three coordinator failures restore in one round") {
    auto c = testutil::small_config(3, 2, 2, 1, 1);
    c.K = 5;
    c.T_min = 3;
    auto sc = testutil::base_scenario(c, Strategy::Adjacent, 3);
    sc.horizon = 10.0;
    FailureSpec f;
    f.time = 0.5;
    f.target = TargetKind::Coordinators;
    f.region = 0;
    f.count = 3;
    sc.failures.push_back(f);
    const auto res = run(sc);
    CHECK(res.metrics.recovery == std::vector<RecoverySample>{{RegionId(0), 1, true}});
  }

  TEST_CASE("jammed adjacent links stop cross-region spread") {
    auto sc = coordinated(Strategy::Adjacent);
    FailureSpec f;
    f.time = 0.1;
    f.action = FailureAction::Jam;
    f.target = TargetKind::LinkClass;
    f.link_class = LinkClass::Adjacent;
    f.drop = 1.0;
    sc.failures.push_back(f);
    sc.commands.push_back(testutil::command(1.0, 0, Scope::global()));
    const auto res = run(sc);
    for (const auto& r : res.trace) {
      if (r.event == "deliver") CHECK(r.get_int("crossings") == 0);
    }
    // only region 0's two clusters are reached
    CHECK(res.executed.begin()->second.size() == 2);
    CHECK(res.metrics.drops > 0);
    CHECK(res.accounting.balanced());
  }

  TEST_CASE("unknown failure targets are rejected") {
    const auto sc = coordinated(Strategy::Adjacent);
    const Topology topo = scenario_topology(sc);
    EventQueue q;
    FailureSpec f;
    f.time = 1.0;
    f.id = 999;
    try {
      inject_failure(topo, f, 0, sc.horizon, q);
      FAIL("expected UnknownTarget");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownTarget);
    }
    f.id = 0;
    f.time = 1000.0;
    CHECK_THROWS_AS(inject_failure(topo, f, 0, sc.horizon, q), Error);
    f.time = 1.0;
    const auto ev = inject_failure(topo, f, 0, sc.horizon, q);
    CHECK(ev.kind == EventKind::FailureInjection);
    CHECK(q.empty());
  }

  TEST_CASE("scenario validation names the field") {
    auto sc = coordinated(Strategy::Adjacent);
    sc.config.T_min = 5;
    try {
      sc.validate();
      FAIL("expected ScenarioInvalid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ScenarioInvalid);
      CHECK(std::string(e.what()).find("T_min") != std::string::npos);
    }
    auto bad_cmd = coordinated(Strategy::Adjacent);
    bad_cmd.commands.push_back(testutil::command(1.0, 99, Scope::global()));
    CHECK_THROWS_AS(bad_cmd.validate(), Error);
  }

  TEST_CASE("crossings grow with line length") {
    std::int64_t prev = -1;
    for (int regions : {2, 4, 8}) {
      auto c = testutil::small_config(1, 1, regions, 1, 1);
      auto sc = testutil::base_scenario(c, Strategy::Adjacent, 5);
      sc.adjacency = line_adjacency(static_cast<std::size_t>(regions));
      sc.commands.push_back(
          testutil::command(1.0, 0, Scope::cluster(ClusterId(static_cast<std::uint32_t>(regions - 1)))));
      const auto res = run(sc);
      REQUIRE(res.metrics.messages.size() == 1);
      const auto crossings = res.metrics.messages[0].max_region_crossings;
      CHECK(crossings == regions - 1);
      CHECK(crossings > prev);
      prev = crossings;
    }
  }
}
