#include "poc/vrf.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

namespace poc::vrf {

namespace {

constexpr std::string_view kProofDomain = "poc-vrf-proof-v1";
constexpr std::string_view kValueDomain = "poc-vrf-value-v1";

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  });
}

Bytes proof_message(ByteView seed) {
  Bytes msg(kProofDomain.begin(), kProofDomain.end());
  msg.insert(msg.end(), seed.begin(), seed.end());
  return msg;
}

Value value_from_proof(ByteView proof) {
  Bytes buf(kValueDomain.begin(), kValueDomain.end());
  buf.insert(buf.end(), proof.begin(), proof.end());
  Value v;
  v.bytes = sha256(buf);
  return v;
}

}  // namespace

std::array<std::uint8_t, 32> sha256(ByteView data) {
  ensure_sodium();
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

KeyPair keygen(ByteView entropy) {
  if (entropy.empty()) throw InvalidArgument("keygen: entropy must be non-empty");
  ensure_sodium();
  auto seed = sha256(entropy);
  KeyPair kp;
  kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

Bytes public_key_of(ByteView secret_key) {
  ensure_sodium();
  if (secret_key.size() != crypto_sign_SECRETKEYBYTES) throw InvalidKey("secret key has wrong length");
  Bytes pk(crypto_sign_PUBLICKEYBYTES);
  crypto_sign_ed25519_sk_to_pk(pk.data(), secret_key.data());
  // The libsodium secret key embeds its public key; re-derive from the seed
  // half to reject keys whose halves disagree.
  std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
  crypto_sign_ed25519_sk_to_seed(seed.data(), secret_key.data());
  Bytes derived_pk(crypto_sign_PUBLICKEYBYTES);
  Bytes scratch_sk(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(derived_pk.data(), scratch_sk.data(), seed.data());
  sodium_memzero(scratch_sk.data(), scratch_sk.size());
  if (derived_pk != pk) throw InvalidKey("secret key is inconsistent");
  return pk;
}

Output evaluate(ByteView secret_key, ByteView seed) {
  public_key_of(secret_key);  // validates
  auto msg = proof_message(seed);
  Output out;
  out.proof.resize(crypto_sign_BYTES);
  crypto_sign_detached(out.proof.data(), nullptr, msg.data(), msg.size(), secret_key.data());
  out.value = value_from_proof(out.proof);
  return out;
}

bool verify(ByteView public_key, ByteView seed, const Output &out) {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || out.proof.size() != crypto_sign_BYTES) return false;
  auto msg = proof_message(seed);
  if (crypto_sign_verify_detached(out.proof.data(), msg.data(), msg.size(), public_key.data()) != 0) return false;
  return value_from_proof(out.proof) == out.value;
}

Bytes sign(ByteView secret_key, ByteView message) {
  public_key_of(secret_key);
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key.data());
  return sig;
}

bool verify_signature(ByteView public_key, ByteView message, ByteView signature) {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), public_key.data()) == 0;
}

std::uint64_t value_prefix(const Value &value) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x = (x << 8) | value.bytes[i];
  return x;
}

}  // namespace poc::vrf
