#include "svirgo/topology.hpp"

#include "svirgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace svirgo {

namespace {

void require(bool cond, const std::string& field, const std::string& msg) {
  if (!cond) throw Error(ErrorCode::InvalidConfig, field + ": " + msg);
}

template <class IdT>
std::vector<IdT> iota_ids(std::size_t n) {
  std::vector<IdT> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = IdT(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<std::optional<WorkerId>>* role_vector(RoleMap& m, int layer) {
  switch (layer) {
    case layer::kClusterLeader: return &m.cluster_leader;
    case layer::kRegionalHub: return &m.regional_hub;
    case layer::kLocalGlobal: return &m.local_global;
    case layer::kGlobal: return &m.global;
    default: return nullptr;
  }
}

const std::vector<std::optional<WorkerId>>* role_vector(const RoleMap& m, int layer) {
  return role_vector(const_cast<RoleMap&>(m), layer);
}

}  // namespace

// ---------------------------------------------------------------------------
// HierarchyConfig

void HierarchyConfig::validate() const {
  require(num_layers >= 2 && num_layers <= 5, "num_layers", "must be in [2, 5]");
  require(workers_per_cluster >= 1, "workers_per_cluster", "must be >= 1");
  require(clusters_per_region >= 1, "clusters_per_region", "must be >= 1");
  require(regions_per_hub >= 1, "regions_per_hub", "must be >= 1");
  require(hubs_per_domain >= 1, "hubs_per_domain", "must be >= 1");
  require(domains >= 1, "domains", "must be >= 1");
  require(T_min >= 1, "T_min", "must be >= 1");
  require(T_min <= K, "T_min",
          "T_min (" + std::to_string(T_min) + ") exceeds K (" + std::to_string(K) + ")");
  require(K <= workers_per_region(), "K",
          "K (" + std::to_string(K) + ") exceeds workers per region (" +
              std::to_string(workers_per_region()) + ")");
}

std::size_t HierarchyConfig::num_hubs() const {
  return static_cast<std::size_t>(hubs_per_domain) * static_cast<std::size_t>(domains);
}
std::size_t HierarchyConfig::num_regions() const {
  return num_hubs() * static_cast<std::size_t>(regions_per_hub);
}
std::size_t HierarchyConfig::num_clusters() const {
  return num_regions() * static_cast<std::size_t>(clusters_per_region);
}
std::size_t HierarchyConfig::num_workers() const {
  return num_clusters() * static_cast<std::size_t>(workers_per_cluster);
}

// ---------------------------------------------------------------------------
// RoleMap

std::optional<WorkerId> RoleMap::holder(int layer, std::uint32_t scope) const {
  const auto* v = role_vector(*this, layer);
  if (v == nullptr || scope >= v->size()) return std::nullopt;
  return (*v)[scope];
}

void RoleMap::set(int layer, std::uint32_t scope, std::optional<WorkerId> w) {
  auto* v = role_vector(*this, layer);
  if (v == nullptr || scope >= v->size()) {
    throw Error(ErrorCode::UnknownScope,
                "layer " + std::to_string(layer) + " scope " + std::to_string(scope));
  }
  (*v)[scope] = w;
}

// ---------------------------------------------------------------------------
// Topology

void Topology::build_indexes() {
  const auto& c = config_;
  const std::size_t nw = c.num_workers();
  const std::size_t nc = c.num_clusters();
  const std::size_t nr = c.num_regions();
  const std::size_t nh = c.num_hubs();

  cluster_of_.resize(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    cluster_of_[w] = ClusterId(static_cast<std::uint32_t>(w / c.workers_per_cluster));
  }
  region_of_.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    region_of_[i] = RegionId(static_cast<std::uint32_t>(i / c.clusters_per_region));
  }
  hub_of_.resize(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    hub_of_[i] = HubId(static_cast<std::uint32_t>(i / c.regions_per_hub));
  }
  domain_of_.resize(nh);
  for (std::size_t i = 0; i < nh; ++i) {
    domain_of_[i] = DomainId(static_cast<std::uint32_t>(i / c.hubs_per_domain));
  }
  all_workers_ = iota_ids<WorkerId>(nw);
  all_clusters_ = iota_ids<ClusterId>(nc);
  all_regions_ = iota_ids<RegionId>(nr);
  all_hubs_ = iota_ids<HubId>(nh);
}

std::span<const WorkerId> Topology::workers_in(ClusterId c) const {
  if (!has_cluster(c)) throw Error(ErrorCode::UnknownCluster, std::to_string(c.value));
  const std::size_t n = static_cast<std::size_t>(config_.workers_per_cluster);
  return std::span<const WorkerId>(all_workers_).subspan(c.value * n, n);
}

std::span<const WorkerId> Topology::workers_in(RegionId r) const {
  const std::size_t n = static_cast<std::size_t>(config_.workers_per_region());
  return std::span<const WorkerId>(all_workers_).subspan(r.value * n, n);
}

std::span<const ClusterId> Topology::clusters_in(RegionId r) const {
  const std::size_t n = static_cast<std::size_t>(config_.clusters_per_region);
  return std::span<const ClusterId>(all_clusters_).subspan(r.value * n, n);
}

std::span<const RegionId> Topology::regions_in(HubId h) const {
  const std::size_t n = static_cast<std::size_t>(config_.regions_per_hub);
  return std::span<const RegionId>(all_regions_).subspan(h.value * n, n);
}

std::span<const HubId> Topology::hubs_in(DomainId d) const {
  const std::size_t n = static_cast<std::size_t>(config_.hubs_per_domain);
  return std::span<const HubId>(all_hubs_).subspan(d.value * n, n);
}

bool Topology::adjacent(RegionId a, RegionId b) const {
  const auto& n = adjacency_.at(a.value);
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<RegionEdge> Topology::edges() const {
  std::vector<RegionEdge> out;
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    for (RegionId b : adjacency_[a]) {
      if (a < b.value) out.emplace_back(RegionId(static_cast<std::uint32_t>(a)), b);
    }
  }
  return out;
}

void Topology::set_adjacency(std::span<const RegionEdge> edges) {
  adjacency_.assign(num_regions(), {});
  for (const auto& [a, b] : edges) add_edge(a, b);
}

void Topology::add_edge(RegionId a, RegionId b) {
  if (!has_region(a) || !has_region(b)) {
    throw Error(ErrorCode::InvalidConfig,
                "adjacency: unknown region in edge (" + std::to_string(a.value) + ", " +
                    std::to_string(b.value) + ")");
  }
  if (a == b) {
    throw Error(ErrorCode::InvalidConfig,
                "adjacency: self loop on region " + std::to_string(a.value));
  }
  auto insert = [](std::vector<RegionId>& v, RegionId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert(adjacency_[a.value], b);
  insert(adjacency_[b.value], a);
}

void Topology::remove_edge(RegionId a, RegionId b) {
  auto erase = [](std::vector<RegionId>& v, RegionId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
  };
  if (!has_region(a) || !has_region(b)) {
    throw Error(ErrorCode::InvalidConfig, "adjacency: unknown region");
  }
  erase(adjacency_[a.value], b);
  erase(adjacency_[b.value], a);
}

std::size_t Topology::alive_count() const {
  return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), char{1}));
}

std::vector<RoleRef> Topology::roles_held(WorkerId w) const {
  std::vector<RoleRef> out;
  for (int l = layer::kClusterLeader; l <= config_.num_layers; ++l) {
    const auto* v = role_vector(roles_, l);
    for (std::size_t s = 0; s < v->size(); ++s) {
      if ((*v)[s] == w) out.push_back({l, static_cast<std::uint32_t>(s)});
    }
  }
  return out;
}

std::vector<RoleRef> Topology::kill(WorkerId w) {
  alive_.at(w.value) = 0;
  // A worker's roles can only be scoped at its own ancestors.
  std::vector<RoleRef> vacated;
  const ClusterId c = cluster_of(w);
  const RegionId r = region_of(c);
  const HubId h = hub_of(r);
  const DomainId d = domain_of(h);
  const std::uint32_t scopes[] = {c.value, r.value, h.value, d.value};
  for (int l = layer::kClusterLeader; l <= config_.num_layers; ++l) {
    const std::uint32_t s = scopes[l - layer::kClusterLeader];
    if (roles_.holder(l, s) == w) {
      roles_.set(l, s, std::nullopt);
      vacated.push_back({l, s});
    }
  }
  return vacated;
}

void Topology::revive(WorkerId w) { alive_.at(w.value) = 1; }

void Topology::set_roles(RoleMap roles) { roles_ = std::move(roles); }

void Topology::check_scope(int l, std::uint32_t scope) const {
  if (l < layer::kClusterLeader || l > config_.num_layers) {
    throw Error(ErrorCode::UnknownScope, "layer " + std::to_string(l) + " not configured");
  }
  const auto* v = role_vector(roles_, l);
  if (scope >= v->size()) {
    throw Error(ErrorCode::UnknownScope,
                "layer " + std::to_string(l) + " has no scope " + std::to_string(scope));
  }
}

// ---------------------------------------------------------------------------
// construction

std::vector<RegionEdge> grid_adjacency(std::size_t num_regions) {
  std::vector<RegionEdge> out;
  if (num_regions == 0) return out;
  const auto width = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(num_regions))));
  for (std::size_t i = 0; i < num_regions; ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    if ((i % width) + 1 < width && i + 1 < num_regions) {
      out.emplace_back(RegionId(id), RegionId(id + 1));
    }
    if (i + width < num_regions) {
      out.emplace_back(RegionId(id), RegionId(static_cast<std::uint32_t>(i + width)));
    }
  }
  return out;
}

std::vector<RegionEdge> line_adjacency(std::size_t num_regions) {
  std::vector<RegionEdge> out;
  for (std::size_t i = 0; i + 1 < num_regions; ++i) {
    out.emplace_back(RegionId(static_cast<std::uint32_t>(i)),
                     RegionId(static_cast<std::uint32_t>(i + 1)));
  }
  return out;
}

std::vector<RegionEdge> random_connected_adjacency(std::size_t num_regions,
                                                   double extra_edge_p, Rng& rng) {
  std::vector<std::uint32_t> order(num_regions);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(order);
  std::vector<RegionEdge> out;
  std::vector<std::vector<char>> have(num_regions, std::vector<char>(num_regions, 0));
  for (std::size_t i = 1; i < num_regions; ++i) {
    const std::uint32_t a = order[i];
    const std::uint32_t b = order[rng.below(i)];
    out.emplace_back(RegionId(std::min(a, b)), RegionId(std::max(a, b)));
    have[a][b] = have[b][a] = 1;
  }
  for (std::uint32_t a = 0; a < num_regions; ++a) {
    for (std::uint32_t b = a + 1; b < num_regions; ++b) {
      if (!have[a][b] && rng.bernoulli(extra_edge_p)) {
        out.emplace_back(RegionId(a), RegionId(b));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Topology build_topology(const HierarchyConfig& config, std::uint64_t seed) {
  config.validate();
  Topology t;
  t.config_ = config;
  t.seed_ = seed;
  t.build_indexes();
  t.alive_.assign(t.num_workers(), 1);
  const auto grid = grid_adjacency(t.num_regions());
  t.set_adjacency(grid);

  RoleMap& roles = t.roles_;
  roles.cluster_leader.resize(t.num_clusters());
  for (std::size_t c = 0; c < t.num_clusters(); ++c) {
    roles.cluster_leader[c] = t.workers_in(ClusterId(static_cast<std::uint32_t>(c))).front();
  }
  if (config.num_layers >= layer::kRegionalHub) {
    roles.regional_hub.resize(t.num_regions());
    for (std::size_t r = 0; r < t.num_regions(); ++r) {
      roles.regional_hub[r] = t.workers_in(RegionId(static_cast<std::uint32_t>(r))).front();
    }
  }
  if (config.num_layers >= layer::kLocalGlobal) {
    roles.local_global.resize(t.num_hubs());
    for (std::size_t h = 0; h < t.num_hubs(); ++h) {
      const RegionId first = t.regions_in(HubId(static_cast<std::uint32_t>(h))).front();
      roles.local_global[h] = t.workers_in(first).front();
    }
  }
  if (config.num_layers >= layer::kGlobal) {
    roles.global.resize(t.num_domains());
    for (std::size_t d = 0; d < t.num_domains(); ++d) {
      const HubId first = t.hubs_in(DomainId(static_cast<std::uint32_t>(d))).front();
      roles.global[d] = t.workers_in(t.regions_in(first).front()).front();
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// queries

int hierarchy_distance(const Topology& topo, ClusterId a, ClusterId b) {
  if (!topo.has_cluster(a)) throw Error(ErrorCode::UnknownCluster, std::to_string(a.value));
  if (!topo.has_cluster(b)) throw Error(ErrorCode::UnknownCluster, std::to_string(b.value));
  if (a == b) return 0;
  const RegionId ra = topo.region_of(a), rb = topo.region_of(b);
  if (ra == rb) return 1;
  const HubId ha = topo.hub_of(ra), hb = topo.hub_of(rb);
  if (ha == hb) return 2;
  if (topo.domain_of(ha) == topo.domain_of(hb)) return 3;
  return 4;
}

FlatSet<ClusterId> goal_clusters_for_scope(const Topology& topo, Scope scope) {
  std::vector<ClusterId> out;
  auto add_region = [&](RegionId r) {
    for (ClusterId c : topo.clusters_in(r)) out.push_back(c);
  };
  auto add_hub = [&](HubId h) {
    for (RegionId r : topo.regions_in(h)) add_region(r);
  };
  auto unknown = [&](const char* kind) {
    throw Error(ErrorCode::UnknownScope, std::string(kind) + " " + std::to_string(scope.id));
  };
  switch (scope.kind) {
    case ScopeKind::Cluster:
      if (scope.id >= topo.num_clusters()) unknown("cluster");
      out.emplace_back(scope.id);
      break;
    case ScopeKind::Region:
      if (scope.id >= topo.num_regions()) unknown("region");
      add_region(RegionId(scope.id));
      break;
    case ScopeKind::Hub:
      if (scope.id >= topo.num_hubs()) unknown("hub");
      add_hub(HubId(scope.id));
      break;
    case ScopeKind::Domain:
      if (scope.id >= topo.num_domains()) unknown("domain");
      for (HubId h : topo.hubs_in(DomainId(scope.id))) add_hub(h);
      break;
    case ScopeKind::Global:
      for (std::size_t c = 0; c < topo.num_clusters(); ++c) {
        out.emplace_back(static_cast<std::uint32_t>(c));
      }
      break;
  }
  return FlatSet<ClusterId>(std::move(out));
}

std::vector<WorkerId> role_candidates(const Topology& topo, int l, std::uint32_t scope) {
  topo.check_scope(l, scope);
  std::vector<WorkerId> out;
  const RoleMap& roles = topo.roles();
  auto add_holder = [&](int lower, std::uint32_t s) {
    if (auto w = roles.holder(lower, s); w && topo.is_alive(*w)) out.push_back(*w);
  };
  switch (l) {
    case layer::kClusterLeader:
      for (WorkerId w : topo.workers_in(ClusterId(scope))) {
        if (topo.is_alive(w)) out.push_back(w);
      }
      break;
    case layer::kRegionalHub:
      for (ClusterId c : topo.clusters_in(RegionId(scope))) add_holder(layer::kClusterLeader, c.value);
      break;
    case layer::kLocalGlobal:
      for (RegionId r : topo.regions_in(HubId(scope))) add_holder(layer::kRegionalHub, r.value);
      break;
    case layer::kGlobal:
      for (HubId h : topo.hubs_in(DomainId(scope))) add_holder(layer::kLocalGlobal, h.value);
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RoleMap reelect_role(const Topology& topo, int l, std::uint32_t scope) {
  const auto candidates = role_candidates(topo, l, scope);
  if (candidates.empty()) {
    throw Error(ErrorCode::NoCandidate,
                "layer " + std::to_string(l) + " scope " + std::to_string(scope));
  }
  RoleMap out = topo.roles();
  out.set(l, scope, candidates.front());
  return out;
}

bool role_map_consistent(const Topology& topo) {
  const RoleMap& roles = topo.roles();
  for (int l = layer::kClusterLeader; l <= topo.config().num_layers; ++l) {
    const auto* v = role_vector(roles, l);
    for (std::size_t s = 0; s < v->size(); ++s) {
      const auto w = (*v)[s];
      if (!w) continue;
      if (!topo.has_worker(*w) || !topo.is_alive(*w)) return false;
      const ClusterId c = topo.cluster_of(*w);
      const RegionId r = topo.region_of(c);
      std::uint32_t owner = 0;
      switch (l) {
        case layer::kClusterLeader: owner = c.value; break;
        case layer::kRegionalHub: owner = r.value; break;
        case layer::kLocalGlobal: owner = topo.hub_of(r).value; break;
        default: owner = topo.domain_of(topo.hub_of(r)).value; break;
      }
      if (owner != s) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// serialization

nlohmann::json config_to_json(const HierarchyConfig& c) {
  return nlohmann::json{{"num_layers", c.num_layers},
                        {"workers_per_cluster", c.workers_per_cluster},
                        {"clusters_per_region", c.clusters_per_region},
                        {"regions_per_hub", c.regions_per_hub},
                        {"hubs_per_domain", c.hubs_per_domain},
                        {"domains", c.domains},
                        {"K", c.K},
                        {"T_min", c.T_min}};
}

namespace {

nlohmann::json roles_to_json(const std::vector<std::optional<WorkerId>>& v) {
  auto arr = nlohmann::json::array();
  for (const auto& w : v) {
    if (w) arr.push_back(w->value);
    else arr.push_back(nullptr);
  }
  return arr;
}

std::vector<std::optional<WorkerId>> roles_from_json(const nlohmann::json& j,
                                                     std::size_t expected) {
  if (!j.is_array() || j.size() != expected) {
    throw Error(ErrorCode::InvalidConfig, "roles: wrong length");
  }
  std::vector<std::optional<WorkerId>> out;
  for (const auto& e : j) {
    if (e.is_null()) out.emplace_back(std::nullopt);
    else out.emplace_back(WorkerId(e.get<std::uint32_t>()));
  }
  return out;
}

}  // namespace

nlohmann::json topology_to_json(const Topology& topo) {
  nlohmann::json j;
  j["config"] = config_to_json(topo.config());
  j["seed"] = topo.seed();
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : topo.edges()) edges.push_back({a.value, b.value});
  j["adjacency"] = edges;
  auto dead = nlohmann::json::array();
  for (std::size_t w = 0; w < topo.num_workers(); ++w) {
    if (!topo.is_alive(WorkerId(static_cast<std::uint32_t>(w)))) dead.push_back(w);
  }
  j["dead"] = dead;
  const RoleMap& r = topo.roles();
  j["roles"] = {{"cluster_leader", roles_to_json(r.cluster_leader)},
                {"regional_hub", roles_to_json(r.regional_hub)},
                {"local_global", roles_to_json(r.local_global)},
                {"global", roles_to_json(r.global)}};
  return j;
}

Topology topology_from_json(const nlohmann::json& j) {
  try {
    const auto& c = j.at("config");
    HierarchyConfig cfg;
    cfg.num_layers = c.at("num_layers").get<int>();
    cfg.workers_per_cluster = c.at("workers_per_cluster").get<int>();
    cfg.clusters_per_region = c.at("clusters_per_region").get<int>();
    cfg.regions_per_hub = c.at("regions_per_hub").get<int>();
    cfg.hubs_per_domain = c.at("hubs_per_domain").get<int>();
    cfg.domains = c.at("domains").get<int>();
    cfg.K = c.at("K").get<int>();
    cfg.T_min = c.at("T_min").get<int>();
    Topology t = build_topology(cfg, j.at("seed").get<std::uint64_t>());
    std::vector<RegionEdge> edges;
    for (const auto& e : j.at("adjacency")) {
      edges.emplace_back(RegionId(e.at(0).get<std::uint32_t>()),
                         RegionId(e.at(1).get<std::uint32_t>()));
    }
    t.set_adjacency(edges);
    for (const auto& w : j.at("dead")) {
      const WorkerId id(w.get<std::uint32_t>());
      if (!t.has_worker(id)) throw Error(ErrorCode::InvalidConfig, "dead: unknown worker");
      t.alive_[id.value] = 0;
    }
    const auto& r = j.at("roles");
    RoleMap roles;
    roles.cluster_leader = roles_from_json(r.at("cluster_leader"), t.roles_.cluster_leader.size());
    roles.regional_hub = roles_from_json(r.at("regional_hub"), t.roles_.regional_hub.size());
    roles.local_global = roles_from_json(r.at("local_global"), t.roles_.local_global.size());
    roles.global = roles_from_json(r.at("global"), t.roles_.global.size());
    t.roles_ = std::move(roles);
    if (!role_map_consistent(t)) {
      throw Error(ErrorCode::InvalidConfig, "roles: holder dead or outside its scope");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("topology json: ") + e.what());
  }
}

}  // namespace svirgo
