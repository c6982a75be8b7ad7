#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>

#include "ecosim/bus.hpp"
#include "ecosim/error.hpp"
#include "ecosim/text.hpp"

namespace ecosim::bus {

namespace {

sockaddr_in to_sockaddr(const Address& a, ErrorCode code) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(a.port);
  if (inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) != 1) {
    throw Error(code, "not an IPv4 address: '" + a.host + "'");
  }
  return sa;
}

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

}  // namespace

Address parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "address '" + text + "' lacks :port");
  const auto port = text::parse_int(std::string_view(text).substr(colon + 1));
  if (!port || *port < 0 || *port > 65535) throw Error(ErrorCode::InvalidConfig, "bad port in '" + text + "'");
  Address a{text.substr(0, colon), static_cast<std::uint16_t>(*port)};
  in_addr probe{};
  if (inet_pton(AF_INET, a.host.c_str(), &probe) != 1) {
    throw Error(ErrorCode::InvalidConfig, "not an IPv4 address: '" + a.host + "'");
  }
  return a;
}

UdpEndpoint::UdpEndpoint(const Address& bind_addr, std::optional<Address> peer) : peer_(std::move(peer)) {
  const auto sa = to_sockaddr(bind_addr, ErrorCode::BindFailure);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::BindFailure, sys_error("socket"));
  if (::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL, 0) | O_NONBLOCK) < 0 ||
      ::bind(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) < 0) {
    const auto msg = sys_error("bind " + bind_addr.host + ":" + std::to_string(bind_addr.port));
    ::close(fd_);
    throw Error(ErrorCode::BindFailure, msg);
  }
}

UdpEndpoint::~UdpEndpoint() {
  if (fd_ >= 0) ::close(fd_);
}

Address UdpEndpoint::local() const {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return {buf, ntohs(sa.sin_port)};
}

void UdpEndpoint::send(const Message& m) {
  if (!peer_) throw Error(ErrorCode::SendFailure, "endpoint has no peer");
  send_to(m, *peer_);
}

void UdpEndpoint::send_to(const Message& m, const Address& to) {
  const auto bytes = encode(m);
  const auto sa = to_sockaddr(to, ErrorCode::SendFailure);
  const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
  if (n != static_cast<ssize_t>(bytes.size())) throw Error(ErrorCode::SendFailure, sys_error("sendto"));
  ++counters_.sent;
}

void UdpEndpoint::send_raw(const Bytes& datagram) {
  if (!peer_) throw Error(ErrorCode::SendFailure, "endpoint has no peer");
  const auto sa = to_sockaddr(*peer_, ErrorCode::SendFailure);
  const auto n =
      ::sendto(fd_, datagram.data(), datagram.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
  if (n != static_cast<ssize_t>(datagram.size())) throw Error(ErrorCode::SendFailure, sys_error("sendto"));
  ++counters_.sent;
}

std::vector<Received> UdpEndpoint::poll() {
  std::vector<Received> out;
  std::vector<std::uint8_t> buf(65536);
  while (true) {
    sockaddr_in from{};
    socklen_t len = sizeof from;
    const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n < 0) break;  // EAGAIN: drained
    Message m;
    try {
      m = decode(buf.data(), static_cast<std::size_t>(n));
    } catch (const Error&) {
      ++counters_.decode_errors;
      continue;
    }
    char host[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &from.sin_addr, host, sizeof host);
    const auto key = std::make_pair(std::string(host) + ":" + std::to_string(ntohs(from.sin_port)),
                                    static_cast<std::uint16_t>(m.type()));
    Received r{std::move(m), false};
    if (auto it = last_seq_.find(key); it != last_seq_.end()) {
      if (r.msg.seq == it->second) {
        ++counters_.duplicates;
        continue;
      }
      if (r.msg.seq < it->second) {
        ++counters_.stale;
        continue;
      }
      if (r.msg.seq > it->second + 1) {
        r.gap = true;
        ++counters_.gaps;
      }
    }
    last_seq_[key] = r.msg.seq;
    ++counters_.received;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Received> UdpEndpoint::wait(double timeout_s) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s);
  while (true) {
    auto got = poll();
    if (!got.empty()) return got;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) return got;
    pollfd p{fd_, POLLIN, 0};
    ::poll(&p, 1, static_cast<int>(left));
  }
}

}  // namespace ecosim::bus
