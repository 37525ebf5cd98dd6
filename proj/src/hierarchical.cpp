#include "svirgo/hierarchical.hpp"

#include "svirgo/error.hpp"

#include <algorithm>

namespace svirgo {

std::string to_string(NodeRef n) {
  static const char* names[] = {"cluster", "region", "hub", "domain"};
  if (n.level >= layer::kClusterLeader && n.level <= layer::kGlobal) {
    return std::string(names[n.level - layer::kClusterLeader]) + ":" + std::to_string(n.id);
  }
  return "root";
}

const char* to_string(ImmediateKind k) {
  switch (k) {
    case ImmediateKind::Drop: return "drop";
    case ImmediateKind::Deliver: return "deliver";
    case ImmediateKind::Forwards: return "forwards";
    case ImmediateKind::Stop: return "stop";
  }
  return "?";
}

NodeRef TreeLinks::ancestor(ClusterId c, int level) const {
  if (level >= root_level()) return root();
  switch (level) {
    case layer::kClusterLeader: return {level, c.value};
    case layer::kRegionalHub: return {level, topo_->region_of(c).value};
    case layer::kLocalGlobal: return {level, topo_->hub_of(topo_->region_of(c)).value};
    default:
      return {level, topo_->domain_of(topo_->hub_of(topo_->region_of(c))).value};
  }
}

std::optional<NodeRef> TreeLinks::parent(NodeRef n) const {
  if (is_root(n)) return std::nullopt;
  if (n.level + 1 == root_level()) return root();
  switch (n.level) {
    case layer::kClusterLeader:
      return NodeRef{n.level + 1, topo_->region_of(ClusterId(n.id)).value};
    case layer::kRegionalHub:
      return NodeRef{n.level + 1, topo_->hub_of(RegionId(n.id)).value};
    default:
      return NodeRef{n.level + 1, topo_->domain_of(HubId(n.id)).value};
  }
}

std::vector<NodeRef> TreeLinks::children(NodeRef n) const {
  std::vector<NodeRef> out;
  auto push_range = [&](int level, auto ids) {
    for (auto id : ids) out.push_back({level, id.value});
  };
  if (is_root(n)) {
    const int top = root_level() - 1;
    std::size_t count = 0;
    switch (top) {
      case layer::kClusterLeader: count = topo_->num_clusters(); break;
      case layer::kRegionalHub: count = topo_->num_regions(); break;
      case layer::kLocalGlobal: count = topo_->num_hubs(); break;
      default: count = topo_->num_domains(); break;
    }
    for (std::size_t i = 0; i < count; ++i) out.push_back({top, static_cast<std::uint32_t>(i)});
    return out;
  }
  switch (n.level) {
    case layer::kClusterLeader: break;
    case layer::kRegionalHub:
      push_range(layer::kClusterLeader, topo_->clusters_in(RegionId(n.id)));
      break;
    case layer::kLocalGlobal:
      push_range(layer::kRegionalHub, topo_->regions_in(HubId(n.id)));
      break;
    default:
      push_range(layer::kLocalGlobal, topo_->hubs_in(DomainId(n.id)));
      break;
  }
  return out;
}

std::optional<WorkerId> TreeLinks::holder(NodeRef n) const {
  if (!is_root(n)) return topo_->roles().holder(n.level, n.id);
  for (NodeRef top : children(n)) {
    if (auto w = topo_->roles().holder(top.level, top.id)) return w;
  }
  return std::nullopt;
}

int tree_path_length(const TreeLinks& links, ClusterId a, ClusterId b) {
  const Topology& topo = links.topology();
  if (!topo.has_cluster(a)) throw Error(ErrorCode::UnknownCluster, std::to_string(a.value));
  if (!topo.has_cluster(b)) throw Error(ErrorCode::UnknownCluster, std::to_string(b.value));
  int lca = layer::kClusterLeader;
  while (links.ancestor(a, lca) != links.ancestor(b, lca)) ++lca;
  for (int level = layer::kClusterLeader; level <= lca; ++level) {
    for (ClusterId c : {a, b}) {
      if (!links.holder(links.ancestor(c, level))) {
        throw Error(ErrorCode::Disconnected,
                    to_string(links.ancestor(c, level)) + " has no holder");
      }
    }
  }
  return 2 * (lca - layer::kClusterLeader);
}

namespace {

class Router {
 public:
  Router(LeaderState& state, const TreeLinks& links, const RoutingOptions& options,
         WorkerId self, ImmediateOutcome& out)
      : state_(state), links_(links), options_(options), self_(self), out_(out) {}

  void dispatch(NodeRef node, std::optional<NodeRef> from) {
    if (links_.is_leaf(node) && !process_leaf()) return;

    const auto remaining = unexecuted_goals(out_.message);
    std::vector<NodeRef> down;
    for (NodeRef child : links_.children(node)) {
      if (from && child == *from) continue;
      const bool has_goal = std::any_of(remaining.begin(), remaining.end(),
                                        [&](ClusterId g) { return links_.covers(child, g); });
      if (has_goal) down.push_back(child);
    }
    // Own roles first so leader processing at our own cluster happens before
    // any copy leaves this worker.
    std::stable_partition(down.begin(), down.end(),
                          [&](NodeRef n) { return links_.holder(n) == self_; });
    for (NodeRef child : down) send(node, child);

    const auto parent = links_.parent(node);
    if (!parent || (from && *from == *parent)) return;
    const auto now_remaining = unexecuted_goals(out_.message);
    const bool goals_outside =
        std::any_of(now_remaining.begin(), now_remaining.end(),
                    [&](ClusterId g) { return !links_.covers(node, g); });
    if (goals_outside || (options_.literal_root && !now_remaining.empty())) send(node, *parent);
  }

 private:
  // Returns false when routing must stop at this leaf.
  bool process_leaf() {
    Message& msg = out_.message;
    const ClusterId self_cluster = state_.cluster_id;
    out_.leaf_processed = true;
    if (state_.processed_msgs.contains(msg.id) || msg.visited_cluster_ids.contains(self_cluster)) {
      out_.dropped = true;
      return false;
    }
    state_.processed_msgs.insert(msg.id);
    msg.visited_cluster_ids.insert(self_cluster);
    if (msg.goal_cluster_ids.contains(self_cluster)) {
      out_.recipients = delivery_recipients(links_.topology(), self_cluster, msg);
      msg.executed_cluster_ids.insert(self_cluster);
      out_.delivered = true;
    }
    return !unexecuted_goals(msg).empty();
  }

  void send(NodeRef from, NodeRef to) {
    const auto h = links_.holder(to);
    if (!h) {
      out_.parked.push_back({from, to, self_, out_.message});
      return;
    }
    if (*h == self_) {
      dispatch(to, from);
      return;
    }
    Message copy = out_.message;
    copy.hop_count += 1;
    copy.last_sent_cluster_id = state_.cluster_id;
    out_.forwards.push_back({from, to, self_, *h, std::move(copy)});
  }

  LeaderState& state_;
  const TreeLinks& links_;
  const RoutingOptions& options_;
  WorkerId self_;
  ImmediateOutcome& out_;
};

}  // namespace

ImmediateOutcome leader_on_receive_immediate(LeaderState& state, const Message& m,
                                             const TreeLinks& links,
                                             const RoutingOptions& options, WorkerId self,
                                             NodeRef arrival, std::optional<NodeRef> from) {
  ImmediateOutcome out;
  out.cluster = state.cluster_id;
  out.message = m;
  // A leaf copy already seen here is rejected before any routing.
  if (links.is_leaf(arrival) &&
      (state.processed_msgs.contains(m.id) || m.visited_cluster_ids.contains(state.cluster_id))) {
    out.leaf_processed = true;
    out.dropped = true;
    out.kind = ImmediateKind::Drop;
    return out;
  }
  Router(state, links, options, self, out).dispatch(arrival, from);
  if (!out.forwards.empty() || !out.parked.empty()) {
    out.kind = ImmediateKind::Forwards;
  } else if (out.delivered) {
    out.kind = ImmediateKind::Deliver;
  } else if (out.dropped) {
    out.kind = ImmediateKind::Drop;
  } else {
    out.kind = ImmediateKind::Stop;
  }
  return out;
}

}  // namespace svirgo
