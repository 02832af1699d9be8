#include <doctest.h>

#include "poc/vrf.hpp"

using namespace poc;

namespace {
Bytes b(std::string_view s) { return to_bytes(s); }
}  // namespace

TEST_CASE("evaluate then verify accepts") {
  auto kp = vrf::keygen(b("node-1"));
  auto out = vrf::evaluate(kp.secret_key, b("round-seed"));
  CHECK(out.proof.size() == 64);
  CHECK(vrf::verify(kp.public_key, b("round-seed"), out));
}

TEST_CASE("evaluation is deterministic per key and seed") {
  auto kp = vrf::keygen(b("node-1"));
  auto again = vrf::keygen(b("node-1"));
  CHECK(kp.secret_key == again.secret_key);
  auto a = vrf::evaluate(kp.secret_key, b("s"));
  auto c = vrf::evaluate(again.secret_key, b("s"));
  CHECK(a.value == c.value);
  CHECK(a.proof == c.proof);
  CHECK_FALSE(vrf::evaluate(kp.secret_key, b("t")).value == a.value);
}

TEST_CASE("value is the hash of the proof, so a swapped value fails") {
  auto kp = vrf::keygen(b("n"));
  auto out = vrf::evaluate(kp.secret_key, b("seed"));
  auto other = vrf::evaluate(kp.secret_key, b("seed-2"));
  vrf::Output mixed{other.value, out.proof};
  CHECK_FALSE(vrf::verify(kp.public_key, b("seed"), mixed));
}

TEST_CASE("wrong key, wrong seed and tampered proof are rejected") {
  auto a = vrf::keygen(b("a"));
  auto c = vrf::keygen(b("c"));
  auto out = vrf::evaluate(a.secret_key, b("seed"));
  CHECK_FALSE(vrf::verify(c.public_key, b("seed"), out));
  CHECK_FALSE(vrf::verify(a.public_key, b("seed!"), out));
  for (std::size_t i = 0; i < out.proof.size(); ++i) {
    auto t = out;
    t.proof[i] ^= 0x01;
    CHECK_FALSE(vrf::verify(a.public_key, b("seed"), t));
  }
  auto shortened = out;
  shortened.proof.pop_back();
  CHECK_FALSE(vrf::verify(a.public_key, b("seed"), shortened));
  CHECK_FALSE(vrf::verify(Bytes(5, 1), b("seed"), out));
}

TEST_CASE("keygen needs entropy; malformed secret keys throw InvalidKey") {
  CHECK_THROWS_AS(vrf::keygen({}), InvalidArgument);
  CHECK_THROWS_AS(vrf::evaluate(Bytes(10, 0), b("s")), InvalidKey);
  auto kp = vrf::keygen(b("x"));
  auto broken = kp.secret_key;
  broken[40] ^= 0xff;  // public half no longer matches the seed half
  CHECK_THROWS_AS(vrf::evaluate(broken, b("s")), InvalidKey);
  CHECK(vrf::public_key_of(kp.secret_key) == kp.public_key);
}

TEST_CASE("signatures") {
  auto kp = vrf::keygen(b("signer"));
  auto sig = vrf::sign(kp.secret_key, b("message"));
  CHECK(vrf::verify_signature(kp.public_key, b("message"), sig));
  CHECK_FALSE(vrf::verify_signature(kp.public_key, b("messagf"), sig));
}

TEST_CASE("sha256 matches a known vector") {
  auto d = vrf::sha256(b("abc"));
  CHECK(to_hex(d) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("values compare big-endian") {
  vrf::Value lo;
  vrf::Value hi;
  hi.bytes[0] = 1;
  lo.bytes[31] = 0xff;
  CHECK(lo < hi);
}
