#pragma once

#include <sodium.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vps/alphabet.hpp"
#include "vps/base64.hpp"
#include "vps/core.hpp"
#include "vps/rng.hpp"
#include "vps/time.hpp"

namespace vps {

struct KeyPair {
  std::string cipher_id;
  std::string public_part;   // opaque bytes
  std::string private_part;  // opaque bytes
};

struct Envelope {
  std::string cipher_id;
  std::string ciphertext;  // raw bytes; wire form base64-encodes them
};

enum class OpenStatus {
  ok,
  malformed,  // envelope structure unintelligible
  integrity,  // structure fine but authentication failed (tamper / wrong key)
};

struct OpenResult {
  OpenStatus status = OpenStatus::malformed;
  std::string payload;  // valid only when status == ok
};

class Cipher {
 public:
  virtual ~Cipher() = default;
  virtual std::string id() const = 0;
  virtual KeyPair generate_keypair(Rng& rng) const = 0;
  virtual std::string seal(const std::string& public_part,
                           const std::string& payload) const = 0;
  virtual OpenResult open(const std::string& private_part,
                          const std::string& ciphertext) const = 0;
};

namespace detail {

inline std::uint32_t crc32(const std::string& data) {
  std::uint32_t crc = 0xffffffffu;
  for (unsigned char ch : data) {
    crc ^= ch;
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc >> 1) ^ (0xedb88320u & (~(crc & 1u) + 1u));
    }
  }
  return ~crc;
}

inline std::string crc32_hex(const std::string& data) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc32(data));
  return buf;
}

}  // namespace detail

// Deliberately insecure reversible cipher for tests and golden transcripts:
// a keyed tag plus a CRC so tampering and wrong keys are still detected.
class TestTransparentCipher final : public Cipher {
 public:
  static constexpr std::size_t kKeyChars = 16;

  std::string id() const override { return "test-transparent"; }

  KeyPair generate_keypair(Rng& rng) const override {
    std::string key = rng.hex_token(kKeyChars);
    return KeyPair{id(), key, key};
  }

  std::string seal(const std::string& public_part,
                   const std::string& payload) const override {
    if (public_part.size() != kKeyChars) {
      throw std::invalid_argument("test-transparent: bad key");
    }
    return "T|" + public_part + "|" + payload + "|" +
           detail::crc32_hex(public_part + payload);
  }

  OpenResult open(const std::string& private_part,
                  const std::string& ciphertext) const override {
    // Layout: "T|" <16-char key> "|" <payload> "|" <8-char crc>
    constexpr std::size_t kMin = 2 + kKeyChars + 1 + 0 + 1 + 8;  // empty payload ok
    if (private_part.size() != kKeyChars) return {OpenStatus::malformed, {}};
    if (ciphertext.size() < kMin || ciphertext.rfind("T|", 0) != 0) {
      return {OpenStatus::malformed, {}};
    }
    std::string key = ciphertext.substr(2, kKeyChars);
    if (ciphertext[2 + kKeyChars] != '|' ||
        ciphertext[ciphertext.size() - 9] != '|') {
      return {OpenStatus::malformed, {}};
    }
    std::string payload =
        ciphertext.substr(3 + kKeyChars, ciphertext.size() - kMin);
    std::string crc = ciphertext.substr(ciphertext.size() - 8);
    if (crc != detail::crc32_hex(key + payload) || key != private_part) {
      return {OpenStatus::integrity, {}};
    }
    return {OpenStatus::ok, payload};
  }
};

// Real public-key envelope: libsodium sealed boxes (X25519 + XSalsa20-Poly1305).
class SodiumSealedCipher final : public Cipher {
 public:
  SodiumSealedCipher() {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  }

  std::string id() const override { return "sodium-sealed"; }

  KeyPair generate_keypair(Rng& rng) const override {
    unsigned char seed[crypto_box_SEEDBYTES];
    for (auto& b : seed) b = static_cast<unsigned char>(rng.below(256));
    unsigned char pk[crypto_box_PUBLICKEYBYTES];
    unsigned char sk[crypto_box_SECRETKEYBYTES];
    crypto_box_seed_keypair(pk, sk, seed);
    KeyPair kp;
    kp.cipher_id = id();
    kp.public_part.assign(reinterpret_cast<char*>(pk), sizeof(pk));
    // Private part carries the public key too; seal_open needs both.
    kp.private_part.assign(reinterpret_cast<char*>(pk), sizeof(pk));
    kp.private_part.append(reinterpret_cast<char*>(sk), sizeof(sk));
    return kp;
  }

  std::string seal(const std::string& public_part,
                   const std::string& payload) const override {
    if (public_part.size() != crypto_box_PUBLICKEYBYTES) {
      throw std::invalid_argument("sodium-sealed: bad public key");
    }
    std::string out(payload.size() + crypto_box_SEALBYTES, '\0');
    crypto_box_seal(reinterpret_cast<unsigned char*>(out.data()),
                    reinterpret_cast<const unsigned char*>(payload.data()),
                    payload.size(),
                    reinterpret_cast<const unsigned char*>(public_part.data()));
    return out;
  }

  OpenResult open(const std::string& private_part,
                  const std::string& ciphertext) const override {
    if (private_part.size() !=
        crypto_box_PUBLICKEYBYTES + crypto_box_SECRETKEYBYTES) {
      return {OpenStatus::malformed, {}};
    }
    if (ciphertext.size() < crypto_box_SEALBYTES) {
      return {OpenStatus::malformed, {}};
    }
    std::string out(ciphertext.size() - crypto_box_SEALBYTES, '\0');
    const auto* pk =
        reinterpret_cast<const unsigned char*>(private_part.data());
    const auto* sk = pk + crypto_box_PUBLICKEYBYTES;
    int rc = crypto_box_seal_open(
        reinterpret_cast<unsigned char*>(out.data()),
        reinterpret_cast<const unsigned char*>(ciphertext.data()),
        ciphertext.size(), pk, sk);
    if (rc != 0) return {OpenStatus::integrity, {}};
    return {OpenStatus::ok, out};
  }
};

inline const std::vector<const Cipher*>& cipher_registry() {
  static const TestTransparentCipher transparent;
  static const SodiumSealedCipher sealed;
  static const std::vector<const Cipher*> registry = {&transparent, &sealed};
  return registry;
}

inline const Cipher& cipher_by_id(const std::string& cipher_id) {
  for (const Cipher* c : cipher_registry()) {
    if (c->id() == cipher_id) return *c;
  }
  throw std::invalid_argument("unknown cipher: " + cipher_id);
}

inline KeyPair generate_keypair(const std::string& cipher_id, Rng& rng) {
  return cipher_by_id(cipher_id).generate_keypair(rng);
}

inline Envelope seal(const std::string& cipher_id,
                     const std::string& public_part,
                     const std::string& payload) {
  return Envelope{cipher_id, cipher_by_id(cipher_id).seal(public_part, payload)};
}

inline OpenResult open_envelope(const KeyPair& keypair, const Envelope& env) {
  if (env.cipher_id != keypair.cipher_id) return {OpenStatus::malformed, {}};
  return cipher_by_id(env.cipher_id).open(keypair.private_part, env.ciphertext);
}

// Wire form: "<cipher_id>:<base64 ciphertext>".
inline std::string format_envelope(const Envelope& env) {
  return env.cipher_id + ":" + base64_encode(env.ciphertext);
}

inline std::optional<Envelope> parse_envelope(const std::string& wire) {
  std::size_t colon = wire.find(':');
  if (colon == std::string::npos || colon == 0) return std::nullopt;
  auto raw = base64_decode(wire.substr(colon + 1));
  if (!raw) return std::nullopt;
  return Envelope{wire.substr(0, colon), *raw};
}

// --- payload codecs ---

struct CPayload {
  int c = 0;
  Instant timestamp{};

  bool operator==(const CPayload&) const = default;
};

inline std::string encode_salt_payload(const Salt& salt) {
  return "S|" + format_digits(salt.digits);
}

inline Salt decode_salt_payload(const std::string& bytes, int expected_n,
                                int z) {
  if (bytes.rfind("S|", 0) != 0) throw ParseError("salt payload: bad tag");
  DigitVec digits = parse_digits(bytes.substr(2));
  if (static_cast<int>(digits.size()) != expected_n) {
    throw ParseError("salt payload: wrong length");
  }
  for (int d : digits) {
    if (d >= z) throw ParseError("salt payload: digit out of range");
  }
  return Salt{std::move(digits)};
}

inline std::string encode_c_payload(const CPayload& payload) {
  return "C|" + std::to_string(payload.c) + "|" +
         format_instant(payload.timestamp);
}

inline CPayload decode_c_payload(const std::string& bytes, int z) {
  if (bytes.rfind("C|", 0) != 0) throw ParseError("c payload: bad tag");
  std::size_t sep = bytes.find('|', 2);
  if (sep == std::string::npos) throw ParseError("c payload: missing timestamp");
  std::string c_text = bytes.substr(2, sep - 2);
  if (c_text.empty() || c_text.find_first_not_of("0123456789") != std::string::npos ||
      c_text.size() > 6) {
    throw ParseError("c payload: bad c field");
  }
  int c = std::stoi(c_text);
  if (c >= z) throw ParseError("c payload: c out of range");
  auto ts = parse_instant(bytes.substr(sep + 1));
  if (!ts) throw ParseError("c payload: malformed timestamp");
  return CPayload{c, *ts};
}

}  // namespace vps
