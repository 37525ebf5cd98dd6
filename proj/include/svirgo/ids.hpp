#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace svirgo {

// Dense, zero-based identifier tagged by the kind of entity it names.
template <class Tag>
struct Id {
  std::uint32_t value{0};

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  constexpr auto operator<=>(const Id&) const = default;
};

using WorkerId = Id<struct WorkerTag>;
using ClusterId = Id<struct ClusterTag>;
using RegionId = Id<struct RegionTag>;
using HubId = Id<struct HubTag>;
using DomainId = Id<struct DomainTag>;

// A command is identified by the cluster that created it and that cluster's
// sequence counter. Every copy spawned by forwarding keeps the same id.
struct MsgId {
  ClusterId origin;
  std::uint32_t seq{0};

  auto operator<=>(const MsgId&) const = default;

  std::string str() const {
    return "c" + std::to_string(origin.value) + ":" + std::to_string(seq);
  }
};

}  // namespace svirgo

template <class Tag>
struct std::hash<svirgo::Id<Tag>> {
  std::size_t operator()(const svirgo::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

template <>
struct std::hash<svirgo::MsgId> {
  std::size_t operator()(const svirgo::MsgId& id) const noexcept {
    return (static_cast<std::size_t>(id.origin.value) << 32) ^ id.seq;
  }
};
