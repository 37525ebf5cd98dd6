#pragma once

#include "svirgo/flat_set.hpp"
#include "svirgo/ids.hpp"
#include "svirgo/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace svirgo {

// Layer numbering follows the five-layer hierarchy: workers are layer 1 and
// are the only physical nodes; layers 2..5 are virtual roles.
namespace layer {
inline constexpr int kWorker = 1;
inline constexpr int kClusterLeader = 2;
inline constexpr int kRegionalHub = 3;
inline constexpr int kLocalGlobal = 4;
inline constexpr int kGlobal = 5;
}  // namespace layer

struct HierarchyConfig {
  int num_layers = 5;
  int workers_per_cluster = 1;
  int clusters_per_region = 1;
  int regions_per_hub = 1;
  int hubs_per_domain = 1;
  int domains = 1;
  int K = 1;
  int T_min = 1;

  // Throws InvalidConfig naming the offending field.
  void validate() const;

  std::size_t num_workers() const;
  std::size_t num_clusters() const;
  std::size_t num_regions() const;
  std::size_t num_hubs() const;
  int workers_per_region() const { return workers_per_cluster * clusters_per_region; }

  bool operator==(const HierarchyConfig&) const = default;
};

using RegionEdge = std::pair<RegionId, RegionId>;

// Current holder of every virtual role. A vacant role is std::nullopt; roles
// above the configured layer count are not represented at all.
struct RoleMap {
  std::vector<std::optional<WorkerId>> cluster_leader;  // by ClusterId
  std::vector<std::optional<WorkerId>> regional_hub;    // by RegionId
  std::vector<std::optional<WorkerId>> local_global;    // by HubId
  std::vector<std::optional<WorkerId>> global;          // by DomainId

  std::optional<WorkerId> holder(int layer, std::uint32_t scope) const;
  void set(int layer, std::uint32_t scope, std::optional<WorkerId> w);

  bool operator==(const RoleMap&) const = default;
};

struct RoleRef {
  int layer;
  std::uint32_t scope;
  auto operator<=>(const RoleRef&) const = default;
};

enum class ScopeKind { Cluster, Region, Hub, Domain, Global };

struct Scope {
  ScopeKind kind = ScopeKind::Global;
  std::uint32_t id = 0;

  static Scope cluster(ClusterId c) { return {ScopeKind::Cluster, c.value}; }
  static Scope region(RegionId r) { return {ScopeKind::Region, r.value}; }
  static Scope hub(HubId h) { return {ScopeKind::Hub, h.value}; }
  static Scope domain(DomainId d) { return {ScopeKind::Domain, d.value}; }
  static Scope global() { return {ScopeKind::Global, 0}; }

  bool operator==(const Scope&) const = default;
};

class Topology {
 public:
  Topology() = default;

  const HierarchyConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t num_workers() const { return cluster_of_.size(); }
  std::size_t num_clusters() const { return region_of_.size(); }
  std::size_t num_regions() const { return hub_of_.size(); }
  std::size_t num_hubs() const { return domain_of_.size(); }
  std::size_t num_domains() const { return static_cast<std::size_t>(config_.domains); }

  bool has_worker(WorkerId w) const { return w.value < num_workers(); }
  bool has_cluster(ClusterId c) const { return c.value < num_clusters(); }
  bool has_region(RegionId r) const { return r.value < num_regions(); }

  ClusterId cluster_of(WorkerId w) const { return cluster_of_.at(w.value); }
  RegionId region_of(ClusterId c) const { return region_of_.at(c.value); }
  RegionId region_of(WorkerId w) const { return region_of(cluster_of(w)); }
  HubId hub_of(RegionId r) const { return hub_of_.at(r.value); }
  DomainId domain_of(HubId h) const { return domain_of_.at(h.value); }

  std::span<const WorkerId> workers_in(ClusterId c) const;
  std::span<const WorkerId> workers_in(RegionId r) const;
  std::span<const ClusterId> clusters_in(RegionId r) const;
  std::span<const RegionId> regions_in(HubId h) const;
  std::span<const HubId> hubs_in(DomainId d) const;

  // Sorted neighbour list of a region.
  const std::vector<RegionId>& neighbors(RegionId r) const { return adjacency_.at(r.value); }
  bool adjacent(RegionId a, RegionId b) const;
  std::vector<RegionEdge> edges() const;
  // Replaces the adjacency graph; throws InvalidConfig on self loops or
  // unknown regions. Duplicate and reversed edges are merged.
  void set_adjacency(std::span<const RegionEdge> edges);
  void add_edge(RegionId a, RegionId b);
  void remove_edge(RegionId a, RegionId b);

  bool is_alive(WorkerId w) const { return alive_.at(w.value) != 0; }
  std::size_t alive_count() const;
  // Marks a worker dead and vacates every role it held. Returns those roles.
  std::vector<RoleRef> kill(WorkerId w);
  // Brings a worker back with no roles.
  void revive(WorkerId w);

  const RoleMap& roles() const { return roles_; }
  void set_roles(RoleMap roles);
  std::vector<RoleRef> roles_held(WorkerId w) const;

  // Throws UnknownScope for an id outside the configured counts.
  void check_scope(int layer, std::uint32_t scope) const;

  bool operator==(const Topology&) const = default;

  friend Topology build_topology(const HierarchyConfig& config, std::uint64_t seed);
  friend Topology topology_from_json(const nlohmann::json& j);

 private:
  void build_indexes();

  HierarchyConfig config_;
  std::uint64_t seed_ = 0;

  std::vector<ClusterId> cluster_of_;  // by WorkerId
  std::vector<RegionId> region_of_;    // by ClusterId
  std::vector<HubId> hub_of_;          // by RegionId
  std::vector<DomainId> domain_of_;    // by HubId

  // Identity sequences; ids are contiguous per scope so member lists are
  // subspans of these.
  std::vector<WorkerId> all_workers_;
  std::vector<ClusterId> all_clusters_;
  std::vector<RegionId> all_regions_;
  std::vector<HubId> all_hubs_;

  std::vector<std::vector<RegionId>> adjacency_;
  std::vector<char> alive_;
  RoleMap roles_;
};

// Workers, clusters, regions, hubs and domains get contiguous ids in
// containment order. Regions are embedded row-major in a near-square grid
// and connected to their four grid neighbours. Every role starts on the
// lowest-id worker of its scope.
Topology build_topology(const HierarchyConfig& config, std::uint64_t seed);

std::vector<RegionEdge> grid_adjacency(std::size_t num_regions);
std::vector<RegionEdge> line_adjacency(std::size_t num_regions);
// Random spanning tree plus each remaining pair with probability extra_edge_p.
std::vector<RegionEdge> random_connected_adjacency(std::size_t num_regions,
                                                   double extra_edge_p, Rng& rng);

// 0 same cluster, 1 same region, 2 same hub, 3 same domain, 4 otherwise.
int hierarchy_distance(const Topology& topo, ClusterId a, ClusterId b);

FlatSet<ClusterId> goal_clusters_for_scope(const Topology& topo, Scope scope);

// Picks a new holder for the role at (layer, scope). Eligible: alive workers
// that hold a role one layer down inside the same scope (any alive worker of
// the cluster for layer 2). Lowest WorkerId wins. Returns the updated map; the topology
// itself is not modified. Throws NoCandidate when nobody is eligible.
RoleMap reelect_role(const Topology& topo, int layer, std::uint32_t scope);

// Workers eligible by the same rule, ascending.
std::vector<WorkerId> role_candidates(const Topology& topo, int layer, std::uint32_t scope);

// Every holder alive and inside the scope it governs.
bool role_map_consistent(const Topology& topo);

nlohmann::json topology_to_json(const Topology& topo);
Topology topology_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const HierarchyConfig& c);

}  // namespace svirgo
