#include <bit>
#include <cmath>
#include <string>

#include "ecosim/bus.hpp"
#include "ecosim/error.hpp"

namespace ecosim::bus {

namespace {

constexpr std::size_t kObstacleSize = 5 * 8 + 1;
constexpr std::size_t kSpatSize = 4 + 1 + 3 * 8;
constexpr std::uint8_t kFlagDfco = 0x01;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  Bytes& bytes() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  std::uint64_t get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::TruncatedPayload, "payload ends at byte " + std::to_string(n_) + ", field needs " +
                                                   std::to_string(n) + " more");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

void put_spat(Writer& w, const std::vector<SpatMessage>& list) {
  w.u32(static_cast<std::uint32_t>(list.size()));
  for (const auto& s : list) {
    w.u32(s.light_id);
    w.u8(static_cast<std::uint8_t>(s.current_phase));
    w.f64(s.time_remaining);
    w.f64(s.next_phase_duration);
    w.f64(s.full_cycle);
  }
}

std::uint32_t count(Reader& r, std::size_t stride) {
  const auto n = r.u32();
  if (static_cast<std::uint64_t>(n) * stride > r.remaining()) {
    throw Error(ErrorCode::TruncatedPayload, "list of " + std::to_string(n) + " entries exceeds payload");
  }
  return n;
}

std::vector<SpatMessage> get_spat(Reader& r, double t) {
  std::vector<SpatMessage> out(count(r, kSpatSize));
  for (auto& s : out) {
    s.light_id = r.u32();
    const auto ph = r.u8();
    if (ph > 2) throw Error(ErrorCode::MalformedPayload, "phase " + std::to_string(ph) + " out of range");
    s.current_phase = static_cast<Phase>(ph);
    s.time_remaining = r.f64();
    s.next_phase_duration = r.f64();
    s.full_cycle = r.f64();
    s.timestamp = t;
  }
  return out;
}

void encode_payload(Writer& w, const EnvState& e) {
  w.f64(e.arc);
  w.f64(e.speed);
  w.f64(e.accel);
  w.f64(e.grade);
  w.u32(static_cast<std::uint32_t>(e.obstacles.size()));
  for (const auto& o : e.obstacles) {
    w.f64(o.arc_position);
    w.f64(o.speed);
    w.f64(o.accel);
    w.f64(o.length);
    w.f64(o.width);
    w.u8(static_cast<std::uint8_t>(o.kind));
  }
  put_spat(w, e.spat);
}

void encode_payload(Writer& w, const SpatList& s) { put_spat(w, s.lights); }

void encode_payload(Writer& w, const VehState& v) {
  if (v.gear < 1 || v.gear > 8) throw Error(ErrorCode::MalformedPayload, "gear out of range");
  w.f64(v.arc);
  w.f64(v.speed);
  w.f64(v.accel);
  w.f64(v.engine_speed);
  w.f64(v.fuel_rate);
  w.f64(v.fuel_total);
  w.u8(v.gear);
}

void encode_payload(Writer& w, const ControlCommand& c) {
  if (c.gear_hold && (*c.gear_hold < 1 || *c.gear_hold > 8)) {
    throw Error(ErrorCode::MalformedPayload, "gear_hold out of range");
  }
  w.f64(c.throttle);
  w.f64(c.brake);
  w.u8(c.dfco_request ? kFlagDfco : 0);
  w.u8(c.gear_hold ? static_cast<std::uint8_t>(*c.gear_hold) : 0);
}

Payload decode_payload(MsgType type, Reader& r, double t) {
  switch (type) {
    case MsgType::EnvState: {
      EnvState e;
      e.arc = r.f64();
      e.speed = r.f64();
      e.accel = r.f64();
      e.grade = r.f64();
      e.obstacles.resize(count(r, kObstacleSize));
      std::uint32_t id = 0;
      for (auto& o : e.obstacles) {
        o.id = id++;
        o.arc_position = r.f64();
        o.speed = r.f64();
        o.accel = r.f64();
        o.length = r.f64();
        o.width = r.f64();
        const auto k = r.u8();
        if (k > 1) throw Error(ErrorCode::MalformedPayload, "obstacle kind " + std::to_string(k) + " out of range");
        o.kind = static_cast<ObstacleKind>(k);
      }
      e.spat = get_spat(r, t);
      return e;
    }
    case MsgType::Spat: return SpatList{get_spat(r, t)};
    case MsgType::VehState: {
      VehState v;
      v.arc = r.f64();
      v.speed = r.f64();
      v.accel = r.f64();
      v.engine_speed = r.f64();
      v.fuel_rate = r.f64();
      v.fuel_total = r.f64();
      v.gear = r.u8();
      if (v.gear < 1 || v.gear > 8) throw Error(ErrorCode::MalformedPayload, "gear out of range");
      return v;
    }
    case MsgType::Control: {
      ControlCommand c;
      c.throttle = r.f64();
      c.brake = r.f64();
      const auto flags = r.u8();
      if (flags & ~kFlagDfco) throw Error(ErrorCode::MalformedPayload, "unknown control flags");
      c.dfco_request = flags & kFlagDfco;
      const auto g = r.u8();
      if (g > 8) throw Error(ErrorCode::MalformedPayload, "gear_hold out of range");
      if (g != 0) c.gear_hold = g;
      return c;
    }
  }
  throw Error(ErrorCode::UnknownType, "unknown message type");
}

}  // namespace

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::EnvState: return "ENV_STATE";
    case MsgType::Spat: return "SPAT";
    case MsgType::VehState: return "VEH_STATE";
    case MsgType::Control: return "CONTROL";
  }
  return "UNKNOWN";
}

MsgType Message::type() const {
  static constexpr MsgType kTypes[] = {MsgType::EnvState, MsgType::Spat, MsgType::VehState, MsgType::Control};
  return kTypes[payload.index()];
}

Bytes encode(const Message& m) {
  Writer body;
  std::visit([&](const auto& p) { encode_payload(body, p); }, m.payload);
  Writer w;
  w.u32(kMagic);
  w.u16(kVersion);
  w.u16(static_cast<std::uint16_t>(m.type()));
  w.u32(m.seq);
  w.f64(m.sim_time);
  w.u32(static_cast<std::uint32_t>(body.bytes().size()));
  auto& out = w.bytes();
  out.insert(out.end(), body.bytes().begin(), body.bytes().end());
  return out;
}

Message decode(const std::uint8_t* data, std::size_t size) {
  if (size < kHeaderSize) {
    throw Error(ErrorCode::TruncatedPayload, "datagram of " + std::to_string(size) + " bytes is shorter than header");
  }
  Reader h(data, kHeaderSize);
  const auto magic = h.u32();
  if (magic != kMagic) throw Error(ErrorCode::BadMagic, "bad magic");
  const auto version = h.u16();
  if (version != kVersion) {
    throw Error(ErrorCode::VersionMismatch, "version " + std::to_string(version) + ", expected " +
                                                std::to_string(kVersion));
  }
  const auto type = h.u16();
  if (type < 1 || type > 4) throw Error(ErrorCode::UnknownType, "message type " + std::to_string(type));
  Message m;
  m.seq = h.u32();
  m.sim_time = h.f64();
  const auto len = h.u32();
  if (len > size - kHeaderSize) {
    throw Error(ErrorCode::TruncatedPayload, "payload_len " + std::to_string(len) + " exceeds the " +
                                                 std::to_string(size - kHeaderSize) + " bytes present");
  }
  if (len < size - kHeaderSize) throw Error(ErrorCode::MalformedPayload, "trailing bytes after payload");
  Reader r(data + kHeaderSize, len);
  m.payload = decode_payload(static_cast<MsgType>(type), r, m.sim_time);
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedPayload, "payload longer than its layout");
  return m;
}

VehState to_wire(const VehicleState& s) {
  return {s.arc_position, s.speed,
          s.accel,        s.powertrain.engine_speed,
          s.powertrain.fuel_rate, s.powertrain.fuel_total,
          static_cast<std::uint8_t>(s.powertrain.gear)};
}

}  // namespace ecosim::bus
