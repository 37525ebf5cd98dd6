#include "svirgo/trace.hpp"

#include "svirgo/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

namespace svirgo {

const char* to_string(Component c) {
  switch (c) {
    case Component::Alg1: return "alg1";
    case Component::Alg2: return "alg2";
    case Component::Alg3: return "alg3";
    case Component::Alg4: return "alg4";
    case Component::Kernel: return "kernel";
  }
  return "?";
}

Component component_from_string(const std::string& s) {
  if (s == "alg1") return Component::Alg1;
  if (s == "alg2") return Component::Alg2;
  if (s == "alg3") return Component::Alg3;
  if (s == "alg4") return Component::Alg4;
  if (s == "kernel") return Component::Kernel;
  throw Error(ErrorCode::DecodeError, "unknown component '" + s + "'");
}

const TraceValue* TraceRecord::find(const std::string& key) const {
  for (const auto& [k, v] : aux) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::int64_t TraceRecord::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = find(key);
  if (v == nullptr) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  if (const auto* d = std::get_if<double>(v)) return static_cast<std::int64_t>(*d);
  return fallback;
}

double TraceRecord::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (v == nullptr) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
  return fallback;
}

bool TraceRecord::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (v == nullptr) return fallback;
  if (const auto* b = std::get_if<bool>(v)) return *b;
  return fallback;
}

std::string TraceRecord::get_string(const std::string& key) const {
  const auto* v = find(key);
  if (v == nullptr) return {};
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  return {};
}

std::vector<std::int64_t> TraceRecord::get_ints(const std::string& key) const {
  const auto* v = find(key);
  if (v == nullptr) return {};
  if (const auto* l = std::get_if<std::vector<std::int64_t>>(v)) return *l;
  return {};
}

namespace {

void append_string(std::string& out, const std::string& s) {
  out += nlohmann::json(s).dump();
}

void append_double(std::string& out, double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", d);
  out += buf;
}

void append_value(std::string& out, const TraceValue& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          append_double(out, x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          append_string(out, x);
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else {
          out += '[';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(x[i]);
          }
          out += ']';
        }
      },
      v);
}

MsgId parse_msg_id(const std::string& s) {
  unsigned origin = 0, seq = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "c%u:%u%c", &origin, &seq, &tail) != 2) {
    throw Error(ErrorCode::DecodeError, "bad msg id '" + s + "'");
  }
  return MsgId{ClusterId(origin), seq};
}

SimTime parse_time(const std::string& raw) {
  // Exact decimal parse, so trace times survive a round trip bit-for-bit.
  long long whole = 0;
  unsigned long long frac = 0;
  int consumed = 0;
  const char* p = raw.c_str();
  bool negative = false;
  if (*p == '-') {
    negative = true;
    ++p;
  }
  if (std::sscanf(p, "%lld.%9llu%n", &whole, &frac, &consumed) < 1) {
    throw Error(ErrorCode::DecodeError, "bad time '" + raw + "'");
  }
  const char* dot = std::strchr(p, '.');
  std::size_t digits = 0;
  if (dot != nullptr) {
    for (const char* q = dot + 1; *q >= '0' && *q <= '9'; ++q) ++digits;
  }
  for (std::size_t i = digits; i < 9; ++i) frac *= 10;
  const std::int64_t ticks = static_cast<std::int64_t>(whole) * SimTime::kTicksPerUnit +
                             static_cast<std::int64_t>(frac);
  return SimTime::from_ticks(negative ? -ticks : ticks);
}

}  // namespace

std::string to_json_line(const TraceRecord& r) {
  std::string out;
  out.reserve(160);
  out += "{\"t\":";
  out += r.time.str();
  out += ",\"seq\":";
  out += std::to_string(r.seq);
  out += ",\"comp\":\"";
  out += to_string(r.comp);
  out += "\",\"ev\":";
  append_string(out, r.event);
  auto opt = [&](const char* key, const std::optional<std::uint32_t>& v) {
    if (!v) return;
    out += ",\"";
    out += key;
    out += "\":";
    out += std::to_string(*v);
  };
  opt("region", r.region);
  opt("cluster", r.cluster);
  opt("worker", r.worker);
  if (r.msg) {
    out += ",\"msg\":\"";
    out += r.msg->str();
    out += '"';
  }
  opt("hop", r.hop);
  for (const auto& [k, v] : r.aux) {
    out += ',';
    append_string(out, k);
    out += ':';
    append_value(out, v);
  }
  out += '}';
  return out;
}

TraceRecord parse_trace_line(const std::string& line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::DecodeError, std::string("trace line: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::DecodeError, "trace line is not an object");
  TraceRecord r;
  // Recover the literal time text so no rounding happens on the way back.
  const auto tpos = line.find("\"t\":");
  if (tpos == std::string::npos) throw Error(ErrorCode::DecodeError, "trace line lacks t");
  const auto tend = line.find_first_of(",}", tpos + 4);
  r.time = parse_time(line.substr(tpos + 4, tend - tpos - 4));
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      if (key == "t") continue;
      if (key == "seq") r.seq = v.get<std::uint64_t>();
      else if (key == "comp") r.comp = component_from_string(v.get<std::string>());
      else if (key == "ev") r.event = v.get<std::string>();
      else if (key == "region") r.region = v.get<std::uint32_t>();
      else if (key == "cluster") r.cluster = v.get<std::uint32_t>();
      else if (key == "worker") r.worker = v.get<std::uint32_t>();
      else if (key == "msg") r.msg = parse_msg_id(v.get<std::string>());
      else if (key == "hop") r.hop = v.get<std::uint32_t>();
      else if (v.is_boolean()) r.with(key, v.get<bool>());
      else if (v.is_number_integer()) r.with(key, v.get<std::int64_t>());
      else if (v.is_number_float()) r.with(key, v.get<double>());
      else if (v.is_string()) r.with(key, v.get<std::string>());
      else if (v.is_array()) r.with(key, v.get<std::vector<std::int64_t>>());
      else throw Error(ErrorCode::DecodeError, "unsupported value for '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::DecodeError, std::string("trace line: ") + e.what());
  }
  for (const char* k : {"seq", "comp", "ev"}) {
    if (!j.contains(k)) throw Error(ErrorCode::DecodeError, std::string("trace line lacks ") + k);
  }
  return r;
}

void write_trace(std::ostream& os, const TraceLog& log) {
  for (const auto& r : log) os << to_json_line(r) << '\n';
}

TraceLog read_trace(std::istream& is) {
  TraceLog out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(parse_trace_line(line));
  }
  return out;
}

}  // namespace svirgo
