#include "svirgo/error.hpp"
#include "svirgo/message.hpp"
#include "svirgo/rng.hpp"

#include <doctest.h>

using namespace svirgo;

namespace {

Message random_message(Rng& rng) {
  auto set = [&](std::uint32_t limit) {
    std::vector<ClusterId> v;
    const auto n = rng.below(6);
    for (std::uint64_t i = 0; i < n; ++i) v.emplace_back(static_cast<std::uint32_t>(rng.below(limit)));
    return FlatSet<ClusterId>(std::move(v));
  };
  Message m;
  m.id = {ClusterId(static_cast<std::uint32_t>(rng.below(1000))),
          static_cast<std::uint32_t>(rng.below(1u << 31))};
  m.goal_cluster_ids = set(64);
  std::vector<WorkerId> t;
  for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) {
    t.emplace_back(static_cast<std::uint32_t>(rng.below(500)));
  }
  m.target_worker_ids = FlatSet<WorkerId>(std::move(t));
  m.visited_cluster_ids = set(64);
  m.executed_cluster_ids = set(64);
  m.hop_count = static_cast<std::uint32_t>(rng.below(20));
  m.original_source = ClusterId(static_cast<std::uint32_t>(rng.below(64)));
  m.last_sent_cluster_id = ClusterId(static_cast<std::uint32_t>(rng.below(64)));
  m.forward_flag = rng.bernoulli(0.5);
  for (std::uint64_t i = 0, n = rng.below(8); i < n; ++i) {
    m.payload.push_back(static_cast<std::uint8_t>(rng.below(256)));
  }
  return m;
}

}  // namespace

TEST_SUITE("message") {
  TEST_CASE("new command starts clean") {
    const Message m = new_command(ClusterId(2), 5, {ClusterId(1), ClusterId(4)}, {});
    CHECK(m.id == MsgId{ClusterId(2), 5});
    CHECK(m.visited_cluster_ids.empty());
    CHECK(m.executed_cluster_ids.empty());
    CHECK(m.hop_count == 0);
    CHECK(m.original_source == ClusterId(2));
    CHECK(m.last_sent_cluster_id == ClusterId(2));
    CHECK_FALSE(m.forward_flag);
    CHECK(unexecuted_goals(m).size() == 2);
    CHECK(message_consistent(m));
  }

  TEST_CASE("empty goal set is rejected") {
    try {
      new_command(ClusterId(0), 0, {}, {});
      FAIL("expected EmptyGoalSet");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyGoalSet);
    }
  }

  TEST_CASE("consistency catches executed outside goals or visited") {
    Message m = new_command(ClusterId(0), 0, {ClusterId(1)}, {});
    m.executed_cluster_ids.insert(ClusterId(1));
    CHECK_FALSE(message_consistent(m));  // not visited
    m.visited_cluster_ids.insert(ClusterId(1));
    CHECK(message_consistent(m));
    m.executed_cluster_ids.insert(ClusterId(2));
    m.visited_cluster_ids.insert(ClusterId(2));
    CHECK_FALSE(message_consistent(m));  // not a goal
  }

  TEST_CASE("golden encoding") {
    Message m = new_command(ClusterId(1), 2, {ClusterId(3)}, {WorkerId(7)}, {0xAB});
    m.visited_cluster_ids.insert(ClusterId(1));
    m.hop_count = 4;
    m.forward_flag = true;
    // body: 2*4 id + (4+4) goals + (4+4) targets + (4+4) visited + 4 executed
    //       + 4 hop + 4 source + 4 last + 1 flag + 4 len + 1 payload = 54
    const std::vector<std::uint8_t> want = {
        54, 0, 0, 0,              // body length
        1, 0, 0, 0, 2, 0, 0, 0,   // id
        1, 0, 0, 0, 3, 0, 0, 0,   // goals
        1, 0, 0, 0, 7, 0, 0, 0,   // targets
        1, 0, 0, 0, 1, 0, 0, 0,   // visited
        0, 0, 0, 0,               // executed
        4, 0, 0, 0,               // hop
        1, 0, 0, 0,               // original source
        1, 0, 0, 0,               // last sent
        1,                        // flag
        1, 0, 0, 0, 0xAB,         // payload
    };
    CHECK(encode(m) == want);
    CHECK(decode(want) == m);
  }

  TEST_CASE("encode/decode round trip on random messages") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
      const Message m = random_message(rng);
      CHECK(decode(encode(m)) == m);
    }
  }

  TEST_CASE("decode rejects malformed input") {
    const Message m = new_command(ClusterId(1), 2, {ClusterId(3), ClusterId(4)}, {});
    const auto good = encode(m);
    auto expect_decode_error = [](std::vector<std::uint8_t> bytes) {
      try {
        decode(bytes);
        return false;
      } catch (const Error& e) {
        return e.code() == ErrorCode::DecodeError;
      }
    };
    // truncated
    CHECK(expect_decode_error({good.begin(), good.end() - 1}));
    CHECK(expect_decode_error({good.begin(), good.begin() + 2}));
    // trailing garbage with a patched length
    auto trailing = good;
    trailing.push_back(0);
    trailing[0] = static_cast<std::uint8_t>(trailing[0] + 1);
    CHECK(expect_decode_error(trailing));
    // non-ascending goal set: swap 3 and 4
    auto swapped = good;
    std::swap(swapped[16], swapped[20]);
    CHECK(expect_decode_error(swapped));
    // forward flag 2
    auto flag = good;
    flag[flag.size() - 5] = 2;
    CHECK(expect_decode_error(flag));
  }
}
