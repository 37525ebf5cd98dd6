#include "helpers.hpp"

#include "svirgo/adjacent.hpp"
#include "svirgo/error.hpp"

#include <doctest.h>

#include <algorithm>

using namespace svirgo;

namespace {

bool has(const std::vector<WorkerAction>& v, WorkerAction a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

}  // namespace

TEST_SUITE("adjacent") {
  TEST_CASE("reachable workers cover home and neighbouring regions") {
    // 2 workers per cluster, 2 clusters per region -> 4 workers per region
    Topology t = build_topology(testutil::small_config(2, 2, 2, 2, 1), 1);
    t.set_adjacency(line_adjacency(t.num_regions()));
    t.kill(WorkerId(9));
    const auto got = reachable_workers(t, WorkerId(5));  // region 1
    std::vector<WorkerId> want;
    for (std::uint32_t w = 0; w < 12; ++w) {  // regions 0, 1, 2
      if (w != 5 && w != 9) want.emplace_back(w);
    }
    CHECK(got == want);
    CHECK(reachable_workers(t, WorkerId(999)).empty());
  }

  TEST_CASE("worker actions") {
    const Topology t = build_topology(testutil::small_config(2, 2, 1, 1, 1), 1);
    Message m = new_command(ClusterId(0), 0, {ClusterId(1)}, {WorkerId(2)});

    SUBCASE("fresh copy from another cluster is reported") {
      m.last_sent_cluster_id = ClusterId(0);
      const auto a = worker_on_receive(t, WorkerId(3), m);
      CHECK(a == std::vector<WorkerAction>{WorkerAction::ReportToLeader});
    }
    SUBCASE("targeted worker executes and reports") {
      const auto a = worker_on_receive(t, WorkerId(2), m);
      CHECK(has(a, WorkerAction::ExecuteLocally));
      CHECK(has(a, WorkerAction::ReportToLeader));
    }
    SUBCASE("visited cluster does not report") {
      m.visited_cluster_ids.insert(ClusterId(1));
      CHECK(worker_on_receive(t, WorkerId(3), m).empty());
    }
    SUBCASE("peers of the sending cluster relay a flagged copy") {
      m.forward_flag = true;
      m.last_sent_cluster_id = ClusterId(1);
      m.visited_cluster_ids.insert(ClusterId(1));
      CHECK(worker_on_receive(t, WorkerId(3), m) ==
            std::vector<WorkerAction>{WorkerAction::BroadcastToReachable});
      // unflagged copy is not relayed
      m.forward_flag = false;
      CHECK(worker_on_receive(t, WorkerId(3), m).empty());
    }
    SUBCASE("unknown worker") { CHECK(worker_on_receive(t, WorkerId(77), m).empty()); }
  }

  TEST_CASE("delay formula without jitter is exact") {
    Rng rng(1);
    DelayParams p{2.0, 0.5, 0.0};
    CHECK(compute_delay(3, 4.0, p, rng) == doctest::Approx(8.0));
    CHECK(compute_delay(0, 0.0, p, rng) == 0.0);
    CHECK_THROWS_AS(compute_delay(5, 0.0, p, rng), Error);
    CHECK_THROWS_AS(compute_delay(-1, 0.0, p, rng), Error);
  }

  TEST_CASE("jitter stays below epsilon") {
    Rng rng(8);
    DelayParams p{1.0, 0.0, 0.25};
    for (int i = 0; i < 1000; ++i) {
      const double d = compute_delay(1, 0.0, p, rng);
      CHECK(d >= 1.0);
      CHECK(d < 1.25);
    }
  }

  TEST_CASE("delay params validation") {
    DelayParams p;
    p.beta = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    DelayParams ok;
    CHECK_NOTHROW(ok.validate());
  }

  TEST_CASE("deferred leader outcomes") {
    // 1 worker per cluster, 2 clusters per region, 2 regions per hub, 2 hubs
    const Topology t = build_topology(testutil::small_config(1, 2, 2, 2, 1), 1);
    const DelayParams p{1.0, 0.5, 0.0};
    Rng rng(3);
    const SimTime now = SimTime::from_units(10.0);

    SUBCASE("sole goal is delivered without scheduling") {
      LeaderState s{ClusterId(0), {}, {}};
      const auto out = leader_on_receive_deferred(
          s, new_command(ClusterId(0), 0, {ClusterId(0)}, {}), t, p, now, rng);
      CHECK(out.kind == DeferredKind::Deliver);
      CHECK(out.recipients == std::vector<WorkerId>{WorkerId(0)});
      CHECK(out.message.executed_cluster_ids.contains(ClusterId(0)));
      CHECK(s.pending_broadcasts.empty());
    }
    SUBCASE("remote goal schedules by distance") {
      LeaderState s{ClusterId(0), {}, {}};
      // cluster 5 is in region 2, hub 1: distance 3
      const auto out = leader_on_receive_deferred(
          s, new_command(ClusterId(0), 0, {ClusterId(0), ClusterId(5)}, {}), t, p, now, rng);
      CHECK(out.kind == DeferredKind::DeliverAndSchedule);
      CHECK(out.distance == 3);
      CHECK(out.delay == doctest::Approx(3.0));
      CHECK(out.fire_time == SimTime::from_units(13.0));
      CHECK(s.pending_broadcasts.size() == 1);

      // second command sees one pending broadcast as load
      const auto second = leader_on_receive_deferred(
          s, new_command(ClusterId(0), 1, {ClusterId(1)}, {}), t, p, now, rng);
      CHECK(second.kind == DeferredKind::Schedule);
      CHECK(second.distance == 1);
      CHECK(second.delay == doctest::Approx(1.5));
    }
    SUBCASE("nearest unexecuted goal decides the distance") {
      LeaderState s{ClusterId(0), {}, {}};
      Message m = new_command(ClusterId(3), 0, {ClusterId(1), ClusterId(7)}, {});
      m.executed_cluster_ids.insert(ClusterId(1));
      m.visited_cluster_ids.insert(ClusterId(1));
      const auto out = leader_on_receive_deferred(s, m, t, p, now, rng);
      CHECK(out.distance == 3);
    }
    SUBCASE("duplicates and visited copies are dropped") {
      LeaderState s{ClusterId(0), {}, {}};
      const Message m = new_command(ClusterId(0), 0, {ClusterId(2)}, {});
      CHECK(leader_on_receive_deferred(s, m, t, p, now, rng).kind == DeferredKind::Schedule);
      CHECK(leader_on_receive_deferred(s, m, t, p, now, rng).kind == DeferredKind::Drop);
      LeaderState other{ClusterId(1), {}, {}};
      Message seen = m;
      seen.visited_cluster_ids.insert(ClusterId(1));
      CHECK(leader_on_receive_deferred(other, seen, t, p, now, rng).kind == DeferredKind::Drop);
    }
    SUBCASE("nothing left to do stops") {
      LeaderState s{ClusterId(0), {}, {}};
      Message m = new_command(ClusterId(1), 0, {ClusterId(1)}, {});
      m.visited_cluster_ids.insert(ClusterId(1));
      m.executed_cluster_ids.insert(ClusterId(1));
      CHECK(leader_on_receive_deferred(s, m, t, p, now, rng).kind == DeferredKind::Stop);
    }
  }

  TEST_CASE("broadcast timer outcomes") {
    const Message m = new_command(ClusterId(0), 0, {ClusterId(2)}, {});
    const SimTime fire = SimTime::from_units(4.0);

    LeaderState s{ClusterId(0), {}, {{m.id, fire}}};
    const auto fired = worker_broadcast(s, m, fire, true);
    CHECK(fired.status == BroadcastStatus::Fired);
    CHECK(fired.copy.hop_count == 1);
    CHECK(fired.copy.forward_flag);
    CHECK(fired.copy.last_sent_cluster_id == ClusterId(0));
    CHECK(s.pending_broadcasts.empty());

    LeaderState d{ClusterId(0), {}, {{m.id, fire}}};
    CHECK(worker_broadcast(d, m, fire, false).status == BroadcastStatus::CancelledLeaderDead);
    CHECK(d.pending_broadcasts.empty());

    Message done = m;
    done.visited_cluster_ids.insert(ClusterId(2));
    done.executed_cluster_ids.insert(ClusterId(2));
    LeaderState e{ClusterId(0), {}, {{m.id, fire}}};
    CHECK(worker_broadcast(e, done, fire, true).status == BroadcastStatus::Suppressed);
  }
}
