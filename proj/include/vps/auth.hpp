#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "vps/core.hpp"
#include "vps/envelope.hpp"
#include "vps/rng.hpp"
#include "vps/store.hpp"
#include "vps/time.hpp"

namespace vps {

// Domain failure with a stable machine-readable code (DUPLICATE-USER,
// UNKNOWN-USER, WRONG-SECOND-PASSWORD, ...).
struct DomainError : std::runtime_error {
  std::string code;
  DomainError(std::string code_, const std::string& detail)
      : std::runtime_error(code_ + ": " + detail), code(std::move(code_)) {}
};

enum class RejectReason {
  bad_session,
  bad_response,
  bad_envelope,
  stale_timestamp,
  replayed_c,
};

inline std::string reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::bad_session: return "BAD-SESSION";
    case RejectReason::bad_response: return "BAD-RESPONSE";
    case RejectReason::bad_envelope: return "BAD-ENVELOPE";
    case RejectReason::stale_timestamp: return "STALE-TIMESTAMP";
    case RejectReason::replayed_c: return "REPLAYED-C";
  }
  throw std::logic_error("bad reason");
}

struct LoginOutcome {
  bool accepted = false;
  RejectReason reason = RejectReason::bad_session;
  int matched_c = -1;
  int computations = 0;  // response recomputations this verification cost

  static LoginOutcome accept(int c, int computations) {
    return {true, RejectReason::bad_session, c, computations};
  }
  static LoginOutcome reject(RejectReason r, int computations = 0) {
    return {false, r, -1, computations};
  }
};

struct SessionState {
  std::string session_id;  // 16 hex chars
  std::string username;
  std::optional<Salt> issued_salt;  // absent for MOD
  Instant issued_at{};
  bool consumed = false;
};

// Stateful authentication service over a Store: challenge sessions, the
// three login paths, the c-usage ledger, history access. All mutations
// run under one lock; persist_hook fires after each committed change.
class AuthService {
 public:
  static constexpr std::chrono::seconds kFreshnessWindow{120};
  static constexpr std::chrono::seconds kSessionLifetime{600};

  AuthService(Store store, Rng rng, Clock clock,
              std::function<void(const Store&)> persist_hook = {})
      : store_(std::move(store)),
        rng_(std::move(rng)),
        clock_(std::move(clock)),
        persist_(std::move(persist_hook)) {}

  const Store& store() const { return store_; }
  Store& store_for_update() { return store_; }
  std::mutex& mutex() { return mutex_; }

  AccountRecord register_account(const std::string& username,
                                 SecretCredential credential,
                                 const std::string& alphabet_id,
                                 Scheme scheme,
                                 std::optional<RecoveryFields> recovery = {}) {
    std::lock_guard lock(mutex_);
    if (store_.accounts.count(username)) {
      throw DomainError("DUPLICATE-USER", username);
    }
    Alphabet alphabet = store_.alphabet(alphabet_id);
    SecretCredential checked = SecretCredential::checked(
        std::move(credential.digits), credential.multiplier, alphabet.size());
    AccountRecord acc;
    acc.username = username;
    acc.credential = std::move(checked);
    acc.alphabet_id = alphabet_id;
    acc.scheme = scheme;
    acc.recovery = std::move(recovery);
    auto [it, _] = store_.accounts.emplace(username, std::move(acc));
    commit();
    return it->second;
  }

  SessionState issue_challenge(const std::string& username) {
    std::lock_guard lock(mutex_);
    auto it = store_.accounts.find(username);
    if (it == store_.accounts.end()) {
      throw DomainError("UNKNOWN-USER", username);
    }
    const AccountRecord& acc = it->second;
    SessionState session;
    session.session_id = rng_.hex_token(16);
    session.username = username;
    session.issued_at = clock_();
    if (acc.scheme != Scheme::mod) {
      Alphabet alphabet = store_.alphabet(acc.alphabet_id);
      session.issued_salt =
          random_salt(acc.credential.length(), alphabet, rng_);
    }
    sessions_[session.session_id] = session;
    return session;
  }

  LoginOutcome verify_login_original(const std::string& session_id,
                                     const Response& response) {
    std::lock_guard lock(mutex_);
    SessionState* session = consume_session(session_id);
    if (!session) return LoginOutcome::reject(RejectReason::bad_session);
    AccountRecord& acc = store_.accounts.at(session->username);
    if (acc.scheme != Scheme::orig || !session->issued_salt ||
        response.length() != acc.credential.length()) {
      return LoginOutcome::reject(RejectReason::bad_response);
    }
    int z = store_.alphabet(acc.alphabet_id).size();
    VerifyOutcome vr =
        verify_original(acc.credential, *session->issued_salt, response, z);
    if (!vr.accepted) {
      return LoginOutcome::reject(RejectReason::bad_response, vr.computations);
    }
    if (c_used(acc, vr.matched_c)) {
      return LoginOutcome::reject(RejectReason::replayed_c, vr.computations);
    }
    acc.c_history.push_back(CUsageEntry{vr.matched_c, clock_()});
    commit();
    return LoginOutcome::accept(vr.matched_c, vr.computations);
  }

  LoginOutcome verify_login_enc_c(const std::string& session_id,
                                  const Response& response,
                                  const std::string& envelope_wire) {
    std::lock_guard lock(mutex_);
    SessionState* session = consume_session(session_id);
    if (!session) return LoginOutcome::reject(RejectReason::bad_session);
    AccountRecord& acc = store_.accounts.at(session->username);
    if (acc.scheme != Scheme::orig_enc_c || !session->issued_salt ||
        response.length() != acc.credential.length()) {
      return LoginOutcome::reject(RejectReason::bad_response);
    }
    int z = store_.alphabet(acc.alphabet_id).size();
    CPayload payload;
    try {
      payload = decode_c_payload(open_payload(envelope_wire), z);
    } catch (const ParseError&) {
      return LoginOutcome::reject(RejectReason::bad_envelope);
    }
    Instant now = clock_();
    auto age = now >= payload.timestamp ? now - payload.timestamp
                                        : payload.timestamp - now;
    if (age > kFreshnessWindow) {
      return LoginOutcome::reject(RejectReason::stale_timestamp);
    }
    if (c_used(acc, payload.c)) {
      return LoginOutcome::reject(RejectReason::replayed_c);
    }
    // The point of the sealed-c path: exactly one response computation.
    Response expected = compute_response_original(
        acc.credential, *session->issued_salt, SessionNonce{payload.c}, z);
    if (expected != response) {
      return LoginOutcome::reject(RejectReason::bad_response, 1);
    }
    acc.c_history.push_back(CUsageEntry{payload.c, now});
    commit();
    return LoginOutcome::accept(payload.c, 1);
  }

  LoginOutcome verify_login_modified(const std::string& session_id,
                                     const Response& response,
                                     const std::string& envelope_wire) {
    std::lock_guard lock(mutex_);
    SessionState* session = consume_session(session_id);
    if (!session) return LoginOutcome::reject(RejectReason::bad_session);
    AccountRecord& acc = store_.accounts.at(session->username);
    if (acc.scheme != Scheme::mod ||
        response.length() != acc.credential.length()) {
      return LoginOutcome::reject(RejectReason::bad_response);
    }
    int z = store_.alphabet(acc.alphabet_id).size();
    Salt salt;
    try {
      salt = decode_salt_payload(open_payload(envelope_wire),
                                 acc.credential.length(), z);
    } catch (const ParseError&) {
      return LoginOutcome::reject(RejectReason::bad_envelope);
    }
    if (!verify_modified(acc.credential, salt, response, z)) {
      return LoginOutcome::reject(RejectReason::bad_response, 1);
    }
    return LoginOutcome::accept(-1, 1);
  }

  std::vector<CUsageEntry> c_history(const std::string& username,
                                     bool authenticated) const {
    std::lock_guard lock(mutex_);
    if (!authenticated) {
      throw DomainError("UNAUTHENTICATED", "history is post-login only");
    }
    auto it = store_.accounts.find(username);
    if (it == store_.accounts.end()) {
      throw DomainError("UNKNOWN-USER", username);
    }
    return it->second.c_history;
  }

  // Runs a mutation under the service lock and persists on success;
  // used by the recovery operations which share this store.
  template <typename Fn>
  auto with_store(Fn&& fn) {
    std::lock_guard lock(mutex_);
    if constexpr (std::is_void_v<decltype(fn(store_, rng_, clock_))>) {
      fn(store_, rng_, clock_);
      commit();
    } else {
      auto result = fn(store_, rng_, clock_);
      commit();
      return result;
    }
  }

  std::optional<std::string> session_owner(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second.username;
  }

  Rng& rng() { return rng_; }
  const Clock& clock() const { return clock_; }

 private:
  // Session lookup that enforces single use and expiry; every lookup
  // consumes the session whatever the later verdict.
  SessionState* consume_session(const std::string& session_id) {
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return nullptr;
    SessionState& session = it->second;
    if (session.consumed) return nullptr;
    session.consumed = true;
    if (clock_() - session.issued_at > kSessionLifetime) return nullptr;
    return &session;
  }

  static bool c_used(const AccountRecord& acc, int c) {
    for (const auto& e : acc.c_history) {
      if (e.c == c) return true;
    }
    return false;
  }

  std::string open_payload(const std::string& envelope_wire) const {
    auto env = parse_envelope(envelope_wire);
    if (!env) throw ParseError("envelope: unparseable wire form");
    OpenResult result = open_envelope(store_.server_key, *env);
    if (result.status != OpenStatus::ok) {
      throw ParseError("envelope: open failed");
    }
    return result.payload;
  }

  void commit() {
    if (persist_) persist_(store_);
  }

  Store store_;
  std::map<std::string, SessionState> sessions_;
  Rng rng_;
  Clock clock_;
  std::function<void(const Store&)> persist_;
  mutable std::mutex mutex_;
};

}  // namespace vps
