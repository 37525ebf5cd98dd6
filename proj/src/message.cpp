#include "svirgo/message.hpp"

#include "svirgo/error.hpp"

#include <algorithm>

namespace svirgo {

Message new_command(ClusterId origin, std::uint32_t seq, FlatSet<ClusterId> goals,
                    FlatSet<WorkerId> targets, std::vector<std::uint8_t> payload) {
  if (goals.empty()) {
    throw Error(ErrorCode::EmptyGoalSet, "command from cluster " + std::to_string(origin.value));
  }
  Message m;
  m.id = MsgId{origin, seq};
  m.goal_cluster_ids = std::move(goals);
  m.target_worker_ids = std::move(targets);
  m.original_source = origin;
  m.last_sent_cluster_id = origin;
  m.payload = std::move(payload);
  return m;
}

FlatSet<ClusterId> unexecuted_goals(const Message& m) {
  return m.goal_cluster_ids.difference(m.executed_cluster_ids);
}

bool message_consistent(const Message& m) {
  return m.executed_cluster_ids.is_subset_of(m.goal_cluster_ids) &&
         m.executed_cluster_ids.is_subset_of(m.visited_cluster_ids);
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  template <class T>
  void set(const FlatSet<T>& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    for (const T& id : s) u32(id.value);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  template <class T>
  FlatSet<T> set() {
    const std::uint32_t n = u32();
    if (n > remaining() / 4) fail("set count exceeds input");
    std::vector<T> items;
    items.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      T id(u32());
      if (!items.empty() && !(items.back() < id)) fail("set not strictly ascending");
      items.push_back(id);
    }
    return FlatSet<T>(std::move(items));
  }
  std::vector<std::uint8_t> bytes(std::uint32_t n) {
    need(n);
    std::vector<std::uint8_t> out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

  [[noreturn]] static void fail(const char* what) { throw Error(ErrorCode::DecodeError, what); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("truncated message");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const Message& m) {
  Writer body;
  body.u32(m.id.origin.value);
  body.u32(m.id.seq);
  body.set(m.goal_cluster_ids);
  body.set(m.target_worker_ids);
  body.set(m.visited_cluster_ids);
  body.set(m.executed_cluster_ids);
  body.u32(m.hop_count);
  body.u32(m.original_source.value);
  body.u32(m.last_sent_cluster_id.value);
  body.u8(m.forward_flag ? 1 : 0);
  body.u32(static_cast<std::uint32_t>(m.payload.size()));
  body.bytes().insert(body.bytes().end(), m.payload.begin(), m.payload.end());

  Writer framed;
  framed.u32(static_cast<std::uint32_t>(body.bytes().size()));
  auto& out = framed.bytes();
  out.insert(out.end(), body.bytes().begin(), body.bytes().end());
  return out;
}

Message decode(std::span<const std::uint8_t> bytes) {
  Reader frame(bytes);
  const std::uint32_t len = frame.u32();
  if (len != frame.remaining()) Reader::fail("length prefix does not match input");
  Reader r(bytes.subspan(4));
  Message m;
  m.id.origin = ClusterId(r.u32());
  m.id.seq = r.u32();
  m.goal_cluster_ids = r.set<ClusterId>();
  m.target_worker_ids = r.set<WorkerId>();
  m.visited_cluster_ids = r.set<ClusterId>();
  m.executed_cluster_ids = r.set<ClusterId>();
  m.hop_count = r.u32();
  m.original_source = ClusterId(r.u32());
  m.last_sent_cluster_id = ClusterId(r.u32());
  const std::uint8_t flag = r.u8();
  if (flag > 1) Reader::fail("forward flag must be 0 or 1");
  m.forward_flag = flag == 1;
  m.payload = r.bytes(r.u32());
  if (r.remaining() != 0) Reader::fail("trailing bytes");
  return m;
}

nlohmann::json to_json(const Message& m) {
  auto ids = [](const auto& s) {
    auto a = nlohmann::json::array();
    for (const auto& id : s) a.push_back(id.value);
    return a;
  };
  return nlohmann::json{{"msg", m.id.str()},
                        {"goals", ids(m.goal_cluster_ids)},
                        {"targets", ids(m.target_worker_ids)},
                        {"visited", ids(m.visited_cluster_ids)},
                        {"executed", ids(m.executed_cluster_ids)},
                        {"hop", m.hop_count},
                        {"source", m.original_source.value},
                        {"last_sent", m.last_sent_cluster_id.value},
                        {"forward_flag", m.forward_flag},
                        {"payload_len", m.payload.size()}};
}

}  // namespace svirgo
