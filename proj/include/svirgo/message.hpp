#pragma once

#include "svirgo/flat_set.hpp"
#include "svirgo/ids.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace svirgo {

// Dissemination record shared by both forwarding strategies. Copies are
// plain values; forwarding clones and mutates the clone.
struct Message {
  MsgId id;
  FlatSet<ClusterId> goal_cluster_ids;
  FlatSet<WorkerId> target_worker_ids;  // empty: every worker of a goal cluster executes
  FlatSet<ClusterId> visited_cluster_ids;
  FlatSet<ClusterId> executed_cluster_ids;
  std::uint32_t hop_count = 0;
  ClusterId original_source;
  ClusterId last_sent_cluster_id;
  bool forward_flag = false;
  std::vector<std::uint8_t> payload;

  bool operator==(const Message&) const = default;
};

// Throws EmptyGoalSet when goals is empty.
Message new_command(ClusterId origin, std::uint32_t seq, FlatSet<ClusterId> goals,
                    FlatSet<WorkerId> targets, std::vector<std::uint8_t> payload = {});

FlatSet<ClusterId> unexecuted_goals(const Message& m);

// executed ⊆ goals, executed ⊆ visited.
bool message_consistent(const Message& m);

// Canonical little-endian encoding: u32 body length, then the fields in
// declaration order. Sets are u32 count followed by ascending u32 ids; the
// flag is one byte; payload is u32 length plus bytes.
std::vector<std::uint8_t> encode(const Message& m);
// Throws DecodeError on truncated, oversized or non-canonical input.
Message decode(std::span<const std::uint8_t> bytes);

nlohmann::json to_json(const Message& m);

}  // namespace svirgo
