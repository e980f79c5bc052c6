#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vps/alphabet.hpp"
#include "vps/core.hpp"
#include "vps/envelope.hpp"
#include "vps/time.hpp"

namespace vps {

enum class Scheme { orig, orig_enc_c, mod };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::orig: return "ORIG";
    case Scheme::orig_enc_c: return "ORIG-ENC-C";
    case Scheme::mod: return "MOD";
  }
  throw std::logic_error("bad scheme");
}

inline std::optional<Scheme> scheme_from_name(const std::string& name) {
  if (name == "ORIG") return Scheme::orig;
  if (name == "ORIG-ENC-C") return Scheme::orig_enc_c;
  if (name == "MOD") return Scheme::mod;
  return std::nullopt;
}

struct CUsageEntry {
  int c = 0;
  Instant used_at{};

  bool operator==(const CUsageEntry&) const = default;
};

enum class TokenKind { reset_second_password, reset_primary_credential };

inline std::string token_kind_name(TokenKind k) {
  return k == TokenKind::reset_second_password ? "RESET-SECOND-PASSWORD"
                                               : "RESET-PRIMARY-CREDENTIAL";
}

inline std::optional<TokenKind> token_kind_from_name(const std::string& name) {
  if (name == "RESET-SECOND-PASSWORD") return TokenKind::reset_second_password;
  if (name == "RESET-PRIMARY-CREDENTIAL")
    return TokenKind::reset_primary_credential;
  return std::nullopt;
}

struct ResetToken {
  std::string token;  // 32 hex chars
  TokenKind kind = TokenKind::reset_second_password;
  Instant issued_at{};
  bool used = false;

  bool operator==(const ResetToken&) const = default;
};

struct OutboxMessage {
  std::string to;
  std::string token;
  TokenKind kind = TokenKind::reset_second_password;
  Instant sent_at{};

  bool operator==(const OutboxMessage&) const = default;
};

// Present iff the account opted into recovery; both fields are set
// together at registration time.
struct RecoveryFields {
  std::string secondary_email;
  std::string second_password;
  std::vector<ResetToken> pending_tokens;

  bool operator==(const RecoveryFields&) const = default;
};

struct AccountRecord {
  std::string username;
  SecretCredential credential;
  std::string alphabet_id;
  Scheme scheme = Scheme::orig;
  std::vector<CUsageEntry> c_history;
  std::optional<RecoveryFields> recovery;
  std::vector<OutboxMessage> outbox;

  bool operator==(const AccountRecord&) const = default;
};

// Whole server state as persisted: alphabets, the server keypair, accounts.
struct Store {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, std::string> alphabets;  // id -> symbols
  KeyPair server_key;
  std::map<std::string, AccountRecord> accounts;

  Alphabet alphabet(const std::string& id) const {
    auto it = alphabets.find(id);
    if (it == alphabets.end()) throw ParseError("unknown alphabet: " + id);
    return Alphabet(it->second);
  }

  bool operator==(const Store&) const;
};

inline bool Store::operator==(const Store& other) const {
  return alphabets == other.alphabets &&
         server_key.cipher_id == other.server_key.cipher_id &&
         server_key.public_part == other.server_key.public_part &&
         server_key.private_part == other.server_key.private_part &&
         accounts == other.accounts;
}

inline Store make_store(const std::string& cipher_id, Rng& rng) {
  Store store;
  store.alphabets = builtin_alphabets();
  store.server_key = generate_keypair(cipher_id, rng);
  return store;
}

namespace detail {

using nlohmann::json;

inline Instant require_instant(const json& j, const std::string& field) {
  auto t = parse_instant(j.at(field).get<std::string>());
  if (!t) throw ParseError("store: bad timestamp in field '" + field + "'");
  return *t;
}

inline json account_to_json(const AccountRecord& acc) {
  json j;
  j["credential"] = {{"digits", format_digits(acc.credential.digits)},
                     {"multiplier", acc.credential.multiplier}};
  j["alphabet"] = acc.alphabet_id;
  j["scheme"] = scheme_name(acc.scheme);
  j["c_history"] = json::array();
  for (const auto& e : acc.c_history) {
    j["c_history"].push_back(
        {{"c", e.c}, {"used_at", format_instant(e.used_at)}});
  }
  if (acc.recovery) {
    json tokens = json::array();
    for (const auto& t : acc.recovery->pending_tokens) {
      tokens.push_back({{"token", t.token},
                        {"kind", token_kind_name(t.kind)},
                        {"issued_at", format_instant(t.issued_at)},
                        {"used", t.used}});
    }
    j["recovery"] = {{"secondary_email", acc.recovery->secondary_email},
                     {"second_password", acc.recovery->second_password},
                     {"pending_tokens", std::move(tokens)}};
  } else {
    j["recovery"] = nullptr;
  }
  j["outbox"] = json::array();
  for (const auto& m : acc.outbox) {
    j["outbox"].push_back({{"to", m.to},
                           {"token", m.token},
                           {"kind", token_kind_name(m.kind)},
                           {"sent_at", format_instant(m.sent_at)}});
  }
  return j;
}

inline AccountRecord account_from_json(const std::string& username,
                                       const json& j, const Store& store) {
  AccountRecord acc;
  acc.username = username;
  acc.alphabet_id = j.at("alphabet").get<std::string>();
  Alphabet alphabet = store.alphabet(acc.alphabet_id);
  const json& cred = j.at("credential");
  acc.credential = SecretCredential::checked(
      parse_digits(cred.at("digits").get<std::string>()),
      cred.at("multiplier").get<int>(), alphabet.size());
  auto scheme = scheme_from_name(j.at("scheme").get<std::string>());
  if (!scheme) throw ParseError("store: unknown scheme for " + username);
  acc.scheme = *scheme;
  for (const auto& e : j.at("c_history")) {
    acc.c_history.push_back(
        CUsageEntry{e.at("c").get<int>(), require_instant(e, "used_at")});
  }
  if (j.contains("recovery") && !j.at("recovery").is_null()) {
    const json& r = j.at("recovery");
    RecoveryFields rec;
    rec.secondary_email = r.at("secondary_email").get<std::string>();
    rec.second_password = r.at("second_password").get<std::string>();
    for (const auto& t : r.at("pending_tokens")) {
      auto kind = token_kind_from_name(t.at("kind").get<std::string>());
      if (!kind) throw ParseError("store: unknown token kind");
      rec.pending_tokens.push_back(
          ResetToken{t.at("token").get<std::string>(), *kind,
                     require_instant(t, "issued_at"), t.at("used").get<bool>()});
    }
    acc.recovery = std::move(rec);
  }
  if (j.contains("outbox")) {
    for (const auto& m : j.at("outbox")) {
      auto kind = token_kind_from_name(m.at("kind").get<std::string>());
      if (!kind) throw ParseError("store: unknown outbox kind");
      acc.outbox.push_back(OutboxMessage{m.at("to").get<std::string>(),
                                         m.at("token").get<std::string>(),
                                         *kind, require_instant(m, "sent_at")});
    }
  }
  return acc;
}

}  // namespace detail

inline std::string store_to_json_text(const Store& store) {
  using nlohmann::json;
  json j;
  j["format_version"] = Store::kFormatVersion;
  j["alphabets"] = store.alphabets;
  j["server_key"] = {{"cipher", store.server_key.cipher_id},
                     {"public", base64_encode(store.server_key.public_part)},
                     {"private", base64_encode(store.server_key.private_part)}};
  j["accounts"] = json::object();
  for (const auto& [name, acc] : store.accounts) {
    j["accounts"][name] = detail::account_to_json(acc);
  }
  return j.dump(2) + "\n";
}

inline Store store_from_json_text(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("store: not valid JSON: ") + e.what());
  }
  try {
    int version = j.at("format_version").get<int>();
    if (version != Store::kFormatVersion) {
      throw ParseError("store: unsupported format_version " +
                       std::to_string(version));
    }
    Store store;
    store.alphabets =
        j.at("alphabets").get<std::map<std::string, std::string>>();
    const json& key = j.at("server_key");
    store.server_key.cipher_id = key.at("cipher").get<std::string>();
    auto pub = base64_decode(key.at("public").get<std::string>());
    auto priv = base64_decode(key.at("private").get<std::string>());
    if (!pub || !priv) throw ParseError("store: bad server_key encoding");
    store.server_key.public_part = *pub;
    store.server_key.private_part = *priv;
    for (const auto& [name, acc] : j.at("accounts").items()) {
      store.accounts[name] = detail::account_from_json(name, acc, store);
    }
    return store;
  } catch (const json::exception& e) {
    throw ParseError(std::string("store: ") + e.what());
  }
}

inline void save_store(const Store& store, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write store file: " + path);
  out << store_to_json_text(store);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

inline Store load_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read store file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return store_from_json_text(text);
}

}  // namespace vps
