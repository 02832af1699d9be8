#pragma once

// Verifiable random function used for committee proofs and proposer
// selection.
//
// Construction: deterministic Ed25519 signature over a domain-separated seed
// is the proof, and SHA-256 of the proof is the 256-bit output. Anyone holding
// the public key can check both. Good enough for simulation; it is not an
// ECVRF (Ed25519 signatures are deterministic but not unique), so a node
// that grinds nonces could bias its own output. Callers only see this header,
// so swapping in a production ECVRF does not touch them.

#include <array>
#include <compare>
#include <cstdint>

#include "poc/common.hpp"

namespace poc::vrf {

inline constexpr std::size_t kValueBytes = 32;
inline constexpr std::size_t kProofBytes = 64;
inline constexpr std::size_t kPublicKeyBytes = 32;
inline constexpr std::size_t kSecretKeyBytes = 64;
inline constexpr std::size_t kSeedBytes = 32;

/// 256-bit VRF output. Compares as an unsigned big-endian integer.
struct Value {
  std::array<std::uint8_t, kValueBytes> bytes{};

  auto operator<=>(const Value &) const = default;
};

struct KeyPair {
  Bytes secret_key;
  Bytes public_key;

  bool operator==(const KeyPair &) const = default;
};

struct Output {
  Value value;
  Bytes proof;

  bool operator==(const Output &) const = default;
};

KeyPair keygen(ByteView entropy);

/// Recovers the public half of a secret key. Throws InvalidKey on malformed keys.
Bytes public_key_of(ByteView secret_key);

Output evaluate(ByteView secret_key, ByteView seed);

bool verify(ByteView public_key, ByteView seed, const Output &out);

/// Plain Ed25519 message signatures with the same keys.
Bytes sign(ByteView secret_key, ByteView message);
bool verify_signature(ByteView public_key, ByteView message, ByteView signature);

/// First 8 bytes of the value, big-endian; handy for seeding samplers.
std::uint64_t value_prefix(const Value &value);

/// SHA-256, exposed for chain hashing and seed derivation.
std::array<std::uint8_t, 32> sha256(ByteView data);

}  // namespace poc::vrf
