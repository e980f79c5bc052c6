#pragma once

#include <chrono>
#include <optional>
#include <sstream>
#include <string>

#include "vps/auth.hpp"
#include "vps/core.hpp"
#include "vps/rng.hpp"
#include "vps/store.hpp"
#include "vps/time.hpp"

namespace vps {

constexpr std::chrono::hours kTokenLifetime{24};

namespace detail {

inline AccountRecord& require_account(Store& store,
                                      const std::string& username) {
  auto it = store.accounts.find(username);
  if (it == store.accounts.end()) {
    throw DomainError("UNKNOWN-USER", username);
  }
  return it->second;
}

inline RecoveryFields& require_recovery(AccountRecord& acc) {
  if (!acc.recovery) {
    throw DomainError("NO-RECOVERY-CONFIGURED", acc.username);
  }
  return *acc.recovery;
}

struct TokenRef {
  AccountRecord* account = nullptr;
  ResetToken* token = nullptr;
};

// Tokens are globally unique (32 random hex chars), so a store-wide scan
// suffices. Validates kind, single use, and expiry; does not consume.
inline TokenRef require_live_token(Store& store, const std::string& token,
                                   TokenKind kind, Instant now) {
  for (auto& [_, acc] : store.accounts) {
    if (!acc.recovery) continue;
    for (auto& t : acc.recovery->pending_tokens) {
      if (t.token != token) continue;
      if (t.kind != kind) throw DomainError("WRONG-KIND", token);
      if (t.used) throw DomainError("TOKEN-USED", token);
      if (now - t.issued_at > kTokenLifetime) {
        throw DomainError("TOKEN-EXPIRED", token);
      }
      return {&acc, &t};
    }
  }
  throw DomainError("UNKNOWN-TOKEN", token);
}

inline OutboxMessage issue_reset_token(Store& store,
                                       const std::string& username,
                                       TokenKind kind, Rng& rng,
                                       const Clock& clock) {
  AccountRecord& acc = require_account(store, username);
  RecoveryFields& rec = require_recovery(acc);
  Instant now = clock();
  ResetToken token{rng.hex_token(32), kind, now, false};
  OutboxMessage message{rec.secondary_email, token.token, kind, now};
  rec.pending_tokens.push_back(std::move(token));
  acc.outbox.push_back(message);
  return message;
}

}  // namespace detail

// The second password exclusively gates the secondary email address.
inline void change_secondary_email(Store& store, const std::string& username,
                                   const std::string& presented_second_password,
                                   const std::string& new_email) {
  AccountRecord& acc = detail::require_account(store, username);
  RecoveryFields& rec = detail::require_recovery(acc);
  if (presented_second_password != rec.second_password) {
    throw DomainError("WRONG-SECOND-PASSWORD", username);
  }
  rec.secondary_email = new_email;
}

inline OutboxMessage request_second_password_reset(Store& store,
                                                   const std::string& username,
                                                   Rng& rng,
                                                   const Clock& clock) {
  return detail::issue_reset_token(store, username,
                                   TokenKind::reset_second_password, rng, clock);
}

inline void complete_second_password_reset(Store& store,
                                           const std::string& token,
                                           const std::string& new_second_password,
                                           const Clock& clock) {
  auto ref = detail::require_live_token(
      store, token, TokenKind::reset_second_password, clock());
  ref.token->used = true;
  ref.account->recovery->second_password = new_second_password;
}

inline OutboxMessage request_primary_reset(Store& store,
                                           const std::string& username,
                                           Rng& rng, const Clock& clock) {
  return detail::issue_reset_token(
      store, username, TokenKind::reset_primary_credential, rng, clock);
}

// Installs a validated fresh credential and clears the c ledger (new key,
// fresh ledger). An invalid credential leaves the token unconsumed.
inline void complete_primary_reset(Store& store, const std::string& token,
                                   DigitVec new_digits, int new_multiplier,
                                   const Clock& clock) {
  auto ref = detail::require_live_token(
      store, token, TokenKind::reset_primary_credential, clock());
  int z = store.alphabet(ref.account->alphabet_id).size();
  SecretCredential fresh =
      SecretCredential::checked(std::move(new_digits), new_multiplier, z);
  ref.token->used = true;
  ref.account->credential = std::move(fresh);
  ref.account->c_history.clear();
}

struct ChainedCompromiseReport {
  bool applicable = false;
  bool email_change_blocked = false;    // outcome (a)
  bool primary_reset_succeeded = false; // outcome (b)
  std::string summary;
};

// Demonstration harness for the residual attack: an attacker holding the
// primary credential cannot move the secondary email, but an attacker who
// controls the secondary mailbox reads the reset token and takes over the
// primary credential.
inline ChainedCompromiseReport chained_compromise_scenario(
    Store& store, const std::string& username, bool attacker_controls_mailbox,
    Rng& rng, const Clock& clock) {
  ChainedCompromiseReport report;
  auto it = store.accounts.find(username);
  if (it == store.accounts.end() || !it->second.recovery) {
    report.summary = "scenario inapplicable: account has no secondary email";
    return report;
  }
  report.applicable = true;
  AccountRecord& acc = it->second;
  std::string original_email = acc.recovery->secondary_email;

  // (a) attacker knows the primary credential but not the second password.
  try {
    change_secondary_email(store, username, "attacker-guess",
                           "attacker@evil.example");
  } catch (const DomainError& e) {
    report.email_change_blocked = (e.code == "WRONG-SECOND-PASSWORD");
  }
  report.email_change_blocked =
      report.email_change_blocked &&
      acc.recovery->secondary_email == original_email;

  // (b) attacker controlling the secondary mailbox sees the outbox token.
  std::size_t outbox_before = acc.outbox.size();
  request_primary_reset(store, username, rng, clock);
  if (attacker_controls_mailbox) {
    const OutboxMessage& mail = acc.outbox.at(outbox_before);
    int z = store.alphabet(acc.alphabet_id).size();
    DigitVec attacker_digits(acc.credential.length(), 1 % z);
    try {
      complete_primary_reset(store, mail.token, attacker_digits, 1, clock);
      report.primary_reset_succeeded = true;
    } catch (const DomainError&) {
      report.primary_reset_succeeded = false;
    }
  }

  std::ostringstream oss;
  oss << "email change without second password: "
      << (report.email_change_blocked ? "blocked" : "NOT blocked")
      << "; primary reset via mailbox: "
      << (attacker_controls_mailbox
              ? (report.primary_reset_succeeded ? "succeeded" : "failed")
              : "not attempted (mailbox not controlled)");
  report.summary = oss.str();
  return report;
}

}  // namespace vps
