#pragma once

// Infrastructure-assisted dissemination over the virtual tree. Leaves are
// cluster leaders; interior nodes are the hub, local-global and global roles;
// above the top configured layer a virtual root joins the top-layer nodes.
// A worker holds a contiguous chain of roles from its own cluster upward, so
// tree edges between two roles of the same worker cost nothing: only edges
// between distinct workers are transmissions and count as hops.

#include "svirgo/adjacent.hpp"
#include "svirgo/message.hpp"
#include "svirgo/topology.hpp"

#include <optional>
#include <vector>

namespace svirgo {

struct NodeRef {
  int level = layer::kClusterLeader;  // 2..num_layers, or num_layers + 1 for the root
  std::uint32_t id = 0;

  auto operator<=>(const NodeRef&) const = default;
};

std::string to_string(NodeRef n);

// Read-only view of the virtual tree induced by a topology's role map.
class TreeLinks {
 public:
  explicit TreeLinks(const Topology& topo) : topo_(&topo) {}

  const Topology& topology() const { return *topo_; }

  int root_level() const { return topo_->config().num_layers + 1; }
  NodeRef root() const { return {root_level(), 0}; }
  NodeRef leaf(ClusterId c) const { return {layer::kClusterLeader, c.value}; }
  bool is_leaf(NodeRef n) const { return n.level == layer::kClusterLeader; }
  bool is_root(NodeRef n) const { return n.level == root_level(); }

  NodeRef ancestor(ClusterId c, int level) const;
  std::optional<NodeRef> parent(NodeRef n) const;
  std::vector<NodeRef> children(NodeRef n) const;
  bool covers(NodeRef n, ClusterId c) const { return ancestor(c, n.level) == n; }

  // Role holder; the root is held by the holder of the lowest-id top-layer
  // node that currently has one.
  std::optional<WorkerId> holder(NodeRef n) const;

  // Link class index for the edge between `child` and its parent (0 for the
  // leader-to-hub edge, 1 for hub-to-local-global, ...).
  int edge_index(NodeRef child) const { return child.level - layer::kClusterLeader; }

 private:
  const Topology* topo_;
};

// Edges on the tree path between the two clusters' leaves: 2 * (LCA level - 2).
// Throws Disconnected if a node on the path has no holder.
int tree_path_length(const TreeLinks& links, ClusterId a, ClusterId b);

struct RoutingOptions {
  bool literal_root = false;  // climb to the root instead of stopping at the LCA
  int max_retries = 3;        // re-election events a parked copy waits through

  bool operator==(const RoutingOptions&) const = default;
};

// A transmission between two distinct workers along one tree edge.
struct TreeHop {
  NodeRef from;
  NodeRef to;
  WorkerId sender;
  WorkerId receiver;
  Message copy;  // hop_count already incremented, last_sent set
};

// A hop whose next node had no holder (NoRoute). `copy` is unmodified.
struct ParkedHop {
  NodeRef from;
  NodeRef to;
  WorkerId sender;
  Message copy;
};

enum class ImmediateKind { Drop, Deliver, Forwards, Stop };

const char* to_string(ImmediateKind k);

struct ImmediateOutcome {
  ImmediateKind kind = ImmediateKind::Stop;
  bool leaf_processed = false;   // the worker's own cluster ran leader processing
  bool dropped = false;          // ...and rejected the copy as a duplicate
  bool delivered = false;
  ClusterId cluster;             // the worker's own cluster
  std::vector<WorkerId> recipients;
  Message message;               // state after leaf processing
  std::vector<TreeHop> forwards;
  std::vector<ParkedHop> parked;
};

// Immediate routing at worker `self` for a copy arriving at tree node
// `arrival` (one of self's roles) from `from` (nullopt for a fresh command
// at the origin leaf). Walks every role self holds, running leader
// processing when the walk reaches self's own cluster, and returns the
// transmissions to other workers. `state` is self's cluster state.
ImmediateOutcome leader_on_receive_immediate(LeaderState& state, const Message& m,
                                             const TreeLinks& links,
                                             const RoutingOptions& options, WorkerId self,
                                             NodeRef arrival, std::optional<NodeRef> from);

}  // namespace svirgo
