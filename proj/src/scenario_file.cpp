#include "svirgo/scenario_file.hpp"

#include "svirgo/error.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace svirgo {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ScenarioInvalid, path + ": " + msg);
}

// Strict object reader: remembers which keys were consumed and rejects the
// rest when finished.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(where(), "expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    out = convert<T>(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) bad(at(it.key()), "unknown key");
    }
  }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
          v.get<std::int64_t>() < 0) {
        bad(path, "expected a non-negative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(path, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_string()) bad(path, "expected a string");
      return v.get<std::string>();
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<document>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::uint32_t as_id(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
    bad(path, "expected a non-negative integer id");
  }
  return v.get<std::uint32_t>();
}

RegionEdge as_edge(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) bad(path, "expected a pair of region ids");
  return {RegionId(as_id(v[0], path + "[0]")), RegionId(as_id(v[1], path + "[1]"))};
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array");
  return v;
}

FailureAction action_from_string(const std::string& s, const std::string& path) {
  for (auto a : {FailureAction::Crash, FailureAction::Recover, FailureAction::Jam,
                 FailureAction::Unjam, FailureAction::LinkDown, FailureAction::LinkUp}) {
    if (s == to_string(a)) return a;
  }
  bad(path, "unknown action '" + s + "'");
}

FailureSpec failure_from_json(const json& j, const std::string& path) {
  Obj o(j, path);
  FailureSpec f;
  const json* t = o.get("time");
  if (t == nullptr) bad(o.at("time"), "required");
  f.time = Obj::convert<double>(*t, o.at("time"));
  const json* a = o.get("action");
  if (a == nullptr) bad(o.at("action"), "required");
  f.action = action_from_string(Obj::convert<std::string>(*a, o.at("action")), o.at("action"));

  int targets = 0;
  if (const json* v = o.get("worker")) {
    f.target = TargetKind::Worker;
    f.id = as_id(*v, o.at("worker"));
    ++targets;
  }
  if (const json* v = o.get("leader")) {
    f.target = TargetKind::Leader;
    f.id = as_id(*v, o.at("leader"));
    ++targets;
  }
  if (const json* v = o.get("region")) {
    f.target = TargetKind::Region;
    f.id = as_id(*v, o.at("region"));
    ++targets;
  }
  if (const json* v = o.get("coordinators")) {
    f.target = TargetKind::Coordinators;
    if (v->is_string()) {
      if (v->get<std::string>() != "all") bad(o.at("coordinators"), "expected a region id or \"all\"");
    } else {
      f.region = as_id(*v, o.at("coordinators"));
    }
    ++targets;
  }
  if (const json* v = o.get("link_class")) {
    f.target = TargetKind::LinkClass;
    const auto name = Obj::convert<std::string>(*v, o.at("link_class"));
    try {
      f.link_class = link_class_from_string(name);
    } catch (const Error&) {
      bad(o.at("link_class"), "unknown link class '" + name + "'");
    }
    ++targets;
  }
  if (const json* v = o.get("link")) {
    f.target = TargetKind::Link;
    f.link = as_edge(*v, o.at("link"));
    ++targets;
  }
  if (targets != 1) bad(path, "exactly one target key is required");

  if (const json* v = o.get("probability")) {
    f.probability = Obj::convert<double>(*v, o.at("probability"));
  }
  if (const json* v = o.get("count")) f.count = Obj::convert<int>(*v, o.at("count"));
  o.read("drop", f.drop);
  if (f.target != TargetKind::Coordinators && (f.probability || f.count)) {
    bad(path, "probability and count apply to coordinator targets only");
  }
  if (f.target != TargetKind::LinkClass && o.has("drop")) {
    bad(o.at("drop"), "applies to link_class targets only");
  }
  o.finish();
  return f;
}

json failure_to_json(const FailureSpec& f) {
  json j = json::object();
  j["time"] = f.time;
  j["action"] = to_string(f.action);
  switch (f.target) {
    case TargetKind::Worker: j["worker"] = f.id; break;
    case TargetKind::Leader: j["leader"] = f.id; break;
    case TargetKind::Region: j["region"] = f.id; break;
    case TargetKind::Coordinators:
      if (f.region) j["coordinators"] = *f.region;
      else j["coordinators"] = "all";
      if (f.probability) j["probability"] = *f.probability;
      if (f.count) j["count"] = *f.count;
      break;
    case TargetKind::LinkClass:
      j["link_class"] = to_string(f.link_class);
      j["drop"] = f.drop;
      break;
    case TargetKind::Link:
      j["link"] = {f.link.first.value, f.link.second.value};
      break;
  }
  return j;
}

CommandSpec command_from_json(const json& j, const std::string& path) {
  Obj o(j, path);
  CommandSpec c;
  const json* t = o.get("time");
  if (t == nullptr) bad(o.at("time"), "required");
  c.time = Obj::convert<double>(*t, o.at("time"));
  const json* origin = o.get("origin");
  if (origin == nullptr) bad(o.at("origin"), "required");
  c.origin = as_id(*origin, o.at("origin"));
  if (const json* s = o.get("scope")) {
    try {
      c.scope = scope_from_string(Obj::convert<std::string>(*s, o.at("scope")));
    } catch (const Error& e) {
      bad(o.at("scope"), e.what());
    }
  } else {
    c.scope = Scope::global();
  }
  if (const json* ts = o.get("targets")) {
    const auto& arr = as_array(*ts, o.at("targets"));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.targets.push_back(as_id(arr[i], o.at("targets") + "[" + std::to_string(i) + "]"));
    }
  }
  o.finish();
  return c;
}

}  // namespace

std::string scope_to_string(Scope s) {
  switch (s.kind) {
    case ScopeKind::Cluster: return "cluster:" + std::to_string(s.id);
    case ScopeKind::Region: return "region:" + std::to_string(s.id);
    case ScopeKind::Hub: return "hub:" + std::to_string(s.id);
    case ScopeKind::Domain: return "domain:" + std::to_string(s.id);
    case ScopeKind::Global: return "global";
  }
  return "global";
}

Scope scope_from_string(const std::string& s) {
  if (s == "global") return Scope::global();
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::ScenarioInvalid, "scope '" + s + "' is not kind:id or global");
  }
  const std::string kind = s.substr(0, colon);
  const std::string num = s.substr(colon + 1);
  if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos ||
      num.size() > 9) {
    throw Error(ErrorCode::ScenarioInvalid, "scope '" + s + "' has a bad id");
  }
  const auto id = static_cast<std::uint32_t>(std::stoul(num));
  if (kind == "cluster") return {ScopeKind::Cluster, id};
  if (kind == "region") return {ScopeKind::Region, id};
  if (kind == "hub") return {ScopeKind::Hub, id};
  if (kind == "domain") return {ScopeKind::Domain, id};
  throw Error(ErrorCode::ScenarioInvalid, "scope '" + s + "' has unknown kind");
}

Scenario scenario_from_json(const json& doc) {
  Scenario s;
  Obj root(doc, "");

  if (const json* t = root.get("topology")) {
    Obj o(*t, "topology");
    o.read("num_layers", s.config.num_layers);
    o.read("workers_per_cluster", s.config.workers_per_cluster);
    o.read("clusters_per_region", s.config.clusters_per_region);
    o.read("regions_per_hub", s.config.regions_per_hub);
    o.read("hubs_per_domain", s.config.hubs_per_domain);
    o.read("domains", s.config.domains);
    if (const json* adj = o.get("adjacency")) {
      if (!adj->is_null()) {
        const auto& arr = as_array(*adj, "topology.adjacency");
        std::vector<RegionEdge> edges;
        for (std::size_t i = 0; i < arr.size(); ++i) {
          edges.push_back(as_edge(arr[i], "topology.adjacency[" + std::to_string(i) + "]"));
        }
        s.adjacency = std::move(edges);
      }
    }
    o.finish();
  }

  if (const json* d = root.get("delays")) {
    Obj o(*d, "delays");
    o.read("alpha", s.delays.alpha);
    o.read("beta", s.delays.beta);
    o.read("epsilon", s.delays.epsilon);
    o.read("intra_cluster", s.latencies.intra_cluster);
    o.read("intra_region", s.latencies.intra_region);
    o.read("adjacent", s.latencies.adjacent);
    if (const json* tree = o.get("tree")) {
      if (tree->is_number()) {
        s.latencies.tree.fill(Obj::convert<double>(*tree, "delays.tree"));
      } else {
        const auto& arr = as_array(*tree, "delays.tree");
        if (arr.size() != s.latencies.tree.size()) bad("delays.tree", "expected 4 entries");
        for (std::size_t i = 0; i < arr.size(); ++i) {
          s.latencies.tree[i] =
              Obj::convert<double>(arr[i], "delays.tree[" + std::to_string(i) + "]");
        }
      }
    }
    o.finish();
  }

  if (const json* st = root.get("strategy")) {
    if (st->is_string()) {
      s.strategy = strategy_from_string(st->get<std::string>());
    } else {
      Obj o(*st, "strategy");
      std::string name = to_string(s.strategy);
      o.read("name", name);
      s.strategy = strategy_from_string(name);
      o.read("literal_root", s.routing.literal_root);
      o.read("max_retries", s.routing.max_retries);
      o.finish();
    }
  }

  if (const json* fs = root.get("failures")) {
    const auto& arr = as_array(*fs, "failures");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      s.failures.push_back(failure_from_json(arr[i], "failures[" + std::to_string(i) + "]"));
    }
  }
  if (const json* cs = root.get("commands")) {
    const auto& arr = as_array(*cs, "commands");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      s.commands.push_back(command_from_json(arr[i], "commands[" + std::to_string(i) + "]"));
    }
  }
  root.read("seed", s.seed);
  root.read("horizon", s.horizon);

  if (const json* c = root.get("coordinator")) {
    Obj o(*c, "coordinator");
    o.read("K", s.config.K);
    o.read("T_min", s.config.T_min);
    o.read("round_period", s.coordinator.round_period);
    o.read("eager_refill", s.coordinator.eager_refill);
    o.read("single_promotion", s.coordinator.single_promotion);
    if (const json* w = o.get("weights")) {
      Obj wo(*w, "coordinator.weights");
      wo.read("connectivity", s.coordinator.weights.connectivity);
      wo.read("load", s.coordinator.weights.load);
      wo.read("energy", s.coordinator.weights.energy);
      wo.finish();
    }
    o.read("energy", s.coordinator.energy);
    o.finish();
  }
  root.finish();
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc = json::object();
  json topo = {
      {"num_layers", s.config.num_layers},
      {"workers_per_cluster", s.config.workers_per_cluster},
      {"clusters_per_region", s.config.clusters_per_region},
      {"regions_per_hub", s.config.regions_per_hub},
      {"hubs_per_domain", s.config.hubs_per_domain},
      {"domains", s.config.domains},
  };
  if (s.adjacency) {
    json edges = json::array();
    for (const auto& [a, b] : *s.adjacency) edges.push_back({a.value, b.value});
    topo["adjacency"] = edges;
  }
  doc["topology"] = topo;
  doc["delays"] = {
      {"alpha", s.delays.alpha},
      {"beta", s.delays.beta},
      {"epsilon", s.delays.epsilon},
      {"intra_cluster", s.latencies.intra_cluster},
      {"intra_region", s.latencies.intra_region},
      {"adjacent", s.latencies.adjacent},
      {"tree", s.latencies.tree},
  };
  doc["strategy"] = {
      {"name", to_string(s.strategy)},
      {"literal_root", s.routing.literal_root},
      {"max_retries", s.routing.max_retries},
  };
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back(failure_to_json(f));
  doc["failures"] = failures;
  json commands = json::array();
  for (const auto& c : s.commands) {
    commands.push_back({{"time", c.time},
                        {"origin", c.origin},
                        {"scope", scope_to_string(c.scope)},
                        {"targets", c.targets}});
  }
  doc["commands"] = commands;
  doc["seed"] = s.seed;
  doc["horizon"] = s.horizon;
  doc["coordinator"] = {
      {"K", s.config.K},
      {"T_min", s.config.T_min},
      {"round_period", s.coordinator.round_period},
      {"eager_refill", s.coordinator.eager_refill},
      {"single_promotion", s.coordinator.single_promotion},
      {"weights",
       {{"connectivity", s.coordinator.weights.connectivity},
        {"load", s.coordinator.weights.load},
        {"energy", s.coordinator.weights.energy}}},
      {"energy", s.coordinator.energy},
  };
  return doc;
}

json read_scenario_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ScenarioInvalid, path + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ScenarioInvalid, "--set '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::vector<std::string> parts;
  std::stringstream ks(key);
  for (std::string part; std::getline(ks, part, '.');) {
    if (part.empty()) throw Error(ErrorCode::ScenarioInvalid, "--set '" + key + "': empty path component");
    parts.push_back(part);
  }
  json* cur = &doc;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur->is_array()) {
      if (p.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::ScenarioInvalid, "--set '" + key + "': '" + p + "' is not an index");
      }
      const auto idx = std::stoul(p);
      if (idx >= cur->size()) {
        throw Error(ErrorCode::ScenarioInvalid, "--set '" + key + "': index " + p + " out of range");
      }
      cur = &(*cur)[idx];
    } else {
      if (cur->is_null()) *cur = json::object();
      if (!cur->is_object()) {
        throw Error(ErrorCode::ScenarioInvalid, "--set '" + key + "': cannot descend into a value");
      }
      cur = &(*cur)[p];
    }
    if (last) *cur = value;
  }
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = read_scenario_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return scenario_from_json(doc);
}

}  // namespace svirgo
