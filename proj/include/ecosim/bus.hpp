#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ecosim/types.hpp"

// Message fabric: fixed little-endian wire codec, a deterministic lockstep
// scheduler and a UDP transport carrying the same datagrams.
namespace ecosim::bus {

inline constexpr std::uint32_t kMagic = 0x49524544;  // "IRED"
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;

enum class MsgType : std::uint16_t { EnvState = 1, Spat = 2, VehState = 3, Control = 4 };
std::string_view to_string(MsgType t);

// Ego kinematics as seen by the environment plus its sensor and V2I view.
struct EnvState {
  double arc = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double grade = 0.0;
  std::vector<Obstacle> obstacles;  // arc, speed, accel, length, width, kind on the wire
  std::vector<SpatMessage> spat;    // timestamp carried by the header
  bool operator==(const EnvState&) const = default;
};

struct SpatList {
  std::vector<SpatMessage> lights;
  bool operator==(const SpatList&) const = default;
};

struct VehState {
  double arc = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double engine_speed = 0.0;
  double fuel_rate = 0.0;
  double fuel_total = 0.0;
  std::uint8_t gear = 1;
  bool operator==(const VehState&) const = default;
};

using Payload = std::variant<EnvState, SpatList, VehState, ControlCommand>;

struct Message {
  std::uint32_t seq = 0;
  double sim_time = 0.0;
  Payload payload;

  MsgType type() const;
  bool operator==(const Message&) const = default;
};

using Bytes = std::vector<std::uint8_t>;

// Throws MalformedPayload for values the layout cannot carry.
Bytes encode(const Message& m);
// Exact-length decode; BadMagic, VersionMismatch, UnknownType,
// TruncatedPayload or MalformedPayload. Never reads past payload_len.
Message decode(const std::uint8_t* data, std::size_t size);
inline Message decode(const Bytes& b) { return decode(b.data(), b.size()); }

VehState to_wire(const VehicleState& s);

// --- lockstep ---

struct TickSchedule {
  double base_period = 0.020;
  std::uint32_t spat_divisor = 5;

  bool spat_tick(std::uint64_t k) const { return k % spat_divisor == 0; }
  std::uint64_t ticks(double duration) const;
};

// Component interfaces; the same objects run under lockstep and UDP.
class EnvStepper {
 public:
  virtual ~EnvStepper() = default;
  virtual EnvState emit_state(double t) = 0;
  virtual SpatList emit_spat(double t) = 0;
  // Takes the plant's state and advances the environment one tick.
  virtual void consume(const VehState& v, double t) = 0;
};

class PlannerStepper {
 public:
  virtual ~PlannerStepper() = default;
  virtual void consume_spat(const SpatList& s, double t) = 0;
  virtual void consume_vehicle(const VehState& v, double t) = 0;
  virtual ControlCommand plan(const EnvState& env, double t) = 0;
};

class PlantStepper {
 public:
  virtual ~PlantStepper() = default;
  virtual VehState step(const ControlCommand& c, double t) = 0;
};

struct Trace {
  std::vector<Message> messages;
  std::uint64_t ticks = 0;

  Bytes serialize() const;  // concatenated encoded messages
  std::vector<VehState> vehicle_states() const;
};

struct RunOptions {
  TickSchedule schedule;
  bool record = true;
  std::function<bool()> stop;  // checked after every tick
};

// Per tick k: env -> ENV_STATE (+SPAT when k mod divisor = 0) -> planner ->
// CONTROL -> plant -> VEH_STATE -> planner, env. Every message passes the
// codec. Stepper exceptions surface as ComponentFault with the tick index.
Trace lockstep_run(EnvStepper& env, PlannerStepper& planner, PlantStepper& plant, double duration,
                   const RunOptions& opt = {});

// --- UDP ---

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

Address parse_address(const std::string& text);  // "host:port"; InvalidConfig otherwise

struct Received {
  Message msg;
  bool gap = false;  // seq jumped forward (loss or reordering upstream)
};

struct EndpointCounters {
  std::size_t sent = 0;
  std::size_t received = 0;
  std::size_t duplicates = 0;
  std::size_t stale = 0;
  std::size_t gaps = 0;
  std::size_t decode_errors = 0;
};

// Non-blocking datagram socket; one encoded message per datagram.
class UdpEndpoint {
 public:
  UdpEndpoint(const Address& bind_addr, std::optional<Address> peer = std::nullopt);
  ~UdpEndpoint();
  UdpEndpoint(const UdpEndpoint&) = delete;
  UdpEndpoint& operator=(const UdpEndpoint&) = delete;

  Address local() const;
  void set_peer(const Address& peer) { peer_ = peer; }
  void send(const Message& m);  // to the peer
  void send_to(const Message& m, const Address& to);
  void send_raw(const Bytes& datagram);
  // Drains the socket. Duplicates (seq = last) and stale (seq < last) per
  // (sender, type) are dropped and counted.
  std::vector<Received> poll();
  // Polls until a message arrives or timeout_s passes.
  std::vector<Received> wait(double timeout_s);
  const EndpointCounters& counters() const { return counters_; }

 private:
  int fd_ = -1;
  std::optional<Address> peer_;
  EndpointCounters counters_;
  std::map<std::pair<std::string, std::uint16_t>, std::uint32_t> last_seq_;  // (sender, type)
};

struct UdpRunStats {
  std::size_t missed_controls = 0;  // plant held the previous command
  EndpointCounters env, planner, plant;
};

// Same staging as lockstep_run, but each message crosses a loopback socket.
Trace udp_run(EnvStepper& env, PlannerStepper& planner, PlantStepper& plant, double duration,
              const RunOptions& opt = {}, UdpRunStats* stats = nullptr, double wait_s = 1.0);

}  // namespace ecosim::bus
