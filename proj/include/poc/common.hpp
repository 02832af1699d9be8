#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poc {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Simulation time. One tick is one abstract time unit.
using Tick = std::int64_t;

/// Currency in micro-units. Integer so settlements conserve value exactly.
using Money = std::int64_t;
inline constexpr Money kMoneyScale = 1'000'000;

/// quantity (kW) x unit price (currency per kW), rounded to micro-units.
Money money_of(double quantity, double unit_price);
inline double money_to_double(Money m) { return static_cast<double>(m) / static_cast<double>(kMoneyScale); }

/// Participant identifier. The supervision node is always `kSupervisor`.
struct NodeId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const NodeId &) const = default;
};

inline constexpr NodeId kSupervisor{0};

inline std::ostream &operator<<(std::ostream &os, NodeId id) { return os << id.value; }

// Errors. Rejections that are part of normal protocol flow (VRF verify,
// block verify, order rejection) are return values, not exceptions.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidKey : public Error {
 public:
  using Error::Error;
};

class InsufficientCandidates : public Error {
 public:
  using Error::Error;
};

class ConsensusFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RejectedBlock : public Error {
 public:
  using Error::Error;
};

class StaleDelivery : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);
double parse_double(std::string_view text);

Bytes to_bytes(std::string_view text);

}  // namespace poc

template <>
struct std::hash<poc::NodeId> {
  std::size_t operator()(poc::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
