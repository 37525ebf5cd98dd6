#pragma once

#include "svirgo/ids.hpp"
#include "svirgo/sim_time.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace svirgo {

enum class Component { Alg1, Alg2, Alg3, Alg4, Kernel };

const char* to_string(Component c);
Component component_from_string(const std::string& s);

using TraceValue =
    std::variant<std::int64_t, double, std::string, bool, std::vector<std::int64_t>>;

// One audit row. Rows from the same event share (time, seq).
struct TraceRecord {
  SimTime time;
  std::uint64_t seq = 0;
  Component comp = Component::Kernel;
  std::string event;
  std::optional<std::uint32_t> region;
  std::optional<std::uint32_t> cluster;
  std::optional<std::uint32_t> worker;
  std::optional<MsgId> msg;
  std::optional<std::uint32_t> hop;
  std::vector<std::pair<std::string, TraceValue>> aux;

  TraceRecord& with(std::string key, TraceValue v) {
    aux.emplace_back(std::move(key), std::move(v));
    return *this;
  }

  const TraceValue* find(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback = 0) const;
  double get_double(const std::string& key, double fallback = 0.0) const;
  bool get_bool(const std::string& key, bool fallback = false) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;

  bool operator==(const TraceRecord&) const = default;
};

using TraceLog = std::vector<TraceRecord>;

template <class Range>
std::vector<std::int64_t> id_list(const Range& ids) {
  std::vector<std::int64_t> out;
  for (const auto& id : ids) out.push_back(static_cast<std::int64_t>(id.value));
  return out;
}

// Single-line JSON object. Key order: t, seq, comp, ev, region, cluster,
// worker, msg, hop, then aux keys in insertion order. Reals are printed with
// nine decimals.
std::string to_json_line(const TraceRecord& r);
// Inverse of to_json_line. Throws DecodeError on malformed input.
TraceRecord parse_trace_line(const std::string& line);

void write_trace(std::ostream& os, const TraceLog& log);
TraceLog read_trace(std::istream& is);

}  // namespace svirgo
