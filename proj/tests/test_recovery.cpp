#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "vps/recovery.hpp"

using namespace vps;

namespace {

struct RecoveryEnv {
  Rng rng{1234};
  Instant now = *parse_instant("2010-06-01T12:00:00Z");
  Store store;

  RecoveryEnv() : store(make_store("test-transparent", rng)) {
    AccountRecord acc;
    acc.username = "alice";
    acc.credential = SecretCredential{{3, 7}, 3};
    acc.alphabet_id = "decimal";
    acc.scheme = Scheme::orig;
    acc.recovery = RecoveryFields{"alice.backup@example.org", "hunter2", {}};
    store.accounts.emplace("alice", std::move(acc));

    AccountRecord bare;
    bare.username = "bob";
    bare.credential = SecretCredential{{1, 2}, 1};
    bare.alphabet_id = "decimal";
    bare.scheme = Scheme::orig;
    store.accounts.emplace("bob", std::move(bare));
  }

  Clock clock() {
    return [this] { return now; };
  }
};

}  // namespace

TEST_CASE("change_secondary_email is gated by the second password") {
  RecoveryEnv env;
  change_secondary_email(env.store, "alice", "hunter2", "new@example.org");
  CHECK(env.store.accounts.at("alice").recovery->secondary_email ==
        "new@example.org");

  SECTION("attacker holding the primary credential is blocked") {
    try {
      change_secondary_email(env.store, "alice", "guess", "evil@example.org");
      FAIL("expected WRONG-SECOND-PASSWORD");
    } catch (const DomainError& e) {
      CHECK(e.code == "WRONG-SECOND-PASSWORD");
    }
    CHECK(env.store.accounts.at("alice").recovery->secondary_email ==
          "new@example.org");
  }

  SECTION("unconfigured account") {
    try {
      change_secondary_email(env.store, "bob", "x", "y@example.org");
      FAIL("expected NO-RECOVERY-CONFIGURED");
    } catch (const DomainError& e) {
      CHECK(e.code == "NO-RECOVERY-CONFIGURED");
    }
  }
}

TEST_CASE("second password reset flow") {
  RecoveryEnv env;

  OutboxMessage msg =
      request_second_password_reset(env.store, "alice", env.rng, env.clock());
  CHECK(msg.to == "alice.backup@example.org");
  CHECK(msg.token.size() == 32);
  const auto& acc = env.store.accounts.at("alice");
  REQUIRE(acc.outbox.size() == 1);
  REQUIRE(acc.recovery->pending_tokens.size() == 1);
  CHECK_FALSE(acc.recovery->pending_tokens[0].used);

  SECTION("two requests yield distinct pending tokens") {
    OutboxMessage msg2 = request_second_password_reset(env.store, "alice",
                                                       env.rng, env.clock());
    CHECK(msg2.token != msg.token);
    CHECK(acc.recovery->pending_tokens.size() == 2);
  }

  SECTION("completion replaces the password; tokens are single-use") {
    complete_second_password_reset(env.store, msg.token, "newpass",
                                   env.clock());
    CHECK(acc.recovery->second_password == "newpass");
    try {
      complete_second_password_reset(env.store, msg.token, "again",
                                     env.clock());
      FAIL("expected TOKEN-USED");
    } catch (const DomainError& e) {
      CHECK(e.code == "TOKEN-USED");
    }
  }

  SECTION("expiry at 24 hours") {
    env.now += std::chrono::hours(25);
    try {
      complete_second_password_reset(env.store, msg.token, "late",
                                     env.clock());
      FAIL("expected TOKEN-EXPIRED");
    } catch (const DomainError& e) {
      CHECK(e.code == "TOKEN-EXPIRED");
    }
  }

  SECTION("wrong kind") {
    OutboxMessage primary =
        request_primary_reset(env.store, "alice", env.rng, env.clock());
    try {
      complete_second_password_reset(env.store, primary.token, "x",
                                     env.clock());
      FAIL("expected WRONG-KIND");
    } catch (const DomainError& e) {
      CHECK(e.code == "WRONG-KIND");
    }
  }

  SECTION("unknown token") {
    CHECK_THROWS_AS(complete_second_password_reset(env.store, "ffff", "x",
                                                   env.clock()),
                    DomainError);
  }

  SECTION("unconfigured account cannot request") {
    CHECK_THROWS_AS(
        request_second_password_reset(env.store, "bob", env.rng, env.clock()),
        DomainError);
  }
}

TEST_CASE("primary reset flow") {
  RecoveryEnv env;
  auto& acc = env.store.accounts.at("alice");
  acc.c_history.push_back(CUsageEntry{4, env.now});

  OutboxMessage msg =
      request_primary_reset(env.store, "alice", env.rng, env.clock());

  SECTION("full flow swaps the credential atomically") {
    SecretCredential old = acc.credential;
    complete_primary_reset(env.store, msg.token, {5, 6}, 7, env.clock());
    CHECK(acc.credential == SecretCredential{{5, 6}, 7});
    CHECK(acc.credential != old);
    CHECK(acc.c_history.empty());  // new key, fresh ledger

    // The old credential's response no longer verifies; a fresh one does.
    Salt salt{{2, 9}};
    Response with_old =
        compute_response_original(old, salt, SessionNonce{4}, 10);
    CHECK_FALSE(verify_original(acc.credential, salt, with_old, 10).accepted);
    Response with_new =
        compute_response_original(acc.credential, salt, SessionNonce{4}, 10);
    CHECK(verify_original(acc.credential, salt, with_new, 10).accepted);
  }

  SECTION("invalid new credential leaves the token unconsumed") {
    CHECK_THROWS_AS(
        complete_primary_reset(env.store, msg.token, {5, 6}, 4, env.clock()),
        std::invalid_argument);  // gcd(4, 10) != 1
    CHECK_FALSE(acc.recovery->pending_tokens[0].used);
    CHECK(acc.c_history.size() == 1);
    // Token still works afterwards.
    complete_primary_reset(env.store, msg.token, {5, 6}, 7, env.clock());
    CHECK(acc.recovery->pending_tokens[0].used);
  }

  SECTION("expired token") {
    env.now += std::chrono::hours(25);
    try {
      complete_primary_reset(env.store, msg.token, {5, 6}, 7, env.clock());
      FAIL("expected TOKEN-EXPIRED");
    } catch (const DomainError& e) {
      CHECK(e.code == "TOKEN-EXPIRED");
    }
  }
}

TEST_CASE("chained compromise scenario") {
  RecoveryEnv env;

  SECTION("mailbox controlled: reset succeeds despite the blocked email change") {
    auto report = chained_compromise_scenario(env.store, "alice", true,
                                              env.rng, env.clock());
    CHECK(report.applicable);
    CHECK(report.email_change_blocked);
    CHECK(report.primary_reset_succeeded);
  }

  SECTION("mailbox not controlled: reset cannot proceed") {
    auto report = chained_compromise_scenario(env.store, "alice", false,
                                              env.rng, env.clock());
    CHECK(report.applicable);
    CHECK(report.email_change_blocked);
    CHECK_FALSE(report.primary_reset_succeeded);
  }

  SECTION("no secondary email: inapplicable") {
    auto report = chained_compromise_scenario(env.store, "bob", true, env.rng,
                                              env.clock());
    CHECK_FALSE(report.applicable);
  }
}

TEST_CASE("outbox is append-only and consumed tokens appear exactly once") {
  RecoveryEnv env;
  std::vector<std::string> consumed;
  for (int i = 0; i < 5; ++i) {
    OutboxMessage msg = request_second_password_reset(env.store, "alice",
                                                      env.rng, env.clock());
    if (i % 2 == 0) {
      complete_second_password_reset(env.store, msg.token,
                                     "pw" + std::to_string(i), env.clock());
      consumed.push_back(msg.token);
    }
  }
  const auto& outbox = env.store.accounts.at("alice").outbox;
  CHECK(outbox.size() == 5);
  for (const auto& token : consumed) {
    int appearances = 0;
    for (const auto& m : outbox) {
      if (m.token == token) ++appearances;
    }
    CHECK(appearances == 1);
  }
}

TEST_CASE("gate invariant under random operation sequences") {
  // No sequence of operations changes the secondary email without either
  // the correct second password or a valid consumed reset token followed
  // by a change with the new password.
  Rng meta(31337);
  for (int run = 0; run < 40; ++run) {
    RecoveryEnv env;
    env.rng = Rng(meta.next_u64());
    std::string true_second = "hunter2";
    std::string email = "alice.backup@example.org";
    std::vector<std::string> pending;  // tokens the legitimate user holds

    for (int step = 0; step < 30; ++step) {
      switch (env.rng.below(6)) {
        case 0: {  // attacker guesses a second password
          std::string guess = "guess" + env.rng.hex_token(2);
          CHECK_THROWS_AS(change_secondary_email(env.store, "alice", guess,
                                                 "evil@example.org"),
                          DomainError);
          break;
        }
        case 1: {  // legitimate change
          std::string next = "mail" + env.rng.hex_token(3) + "@example.org";
          change_secondary_email(env.store, "alice", true_second, next);
          email = next;
          break;
        }
        case 2: {  // request a second-password reset
          pending.push_back(request_second_password_reset(env.store, "alice",
                                                          env.rng, env.clock())
                                .token);
          break;
        }
        case 3: {  // legitimate reset with a held token
          if (pending.empty()) break;
          std::string token = pending.back();
          pending.pop_back();
          std::string next = "pw" + env.rng.hex_token(4);
          try {
            complete_second_password_reset(env.store, token, next,
                                           env.clock());
            true_second = next;
          } catch (const DomainError&) {
            // token may have expired under case 5
          }
          break;
        }
        case 4: {  // attacker tries random tokens
          CHECK_THROWS_AS(complete_second_password_reset(
                              env.store, env.rng.hex_token(32), "evil",
                              env.clock()),
                          DomainError);
          break;
        }
        case 5:  // time passes
          env.now += std::chrono::hours(env.rng.below(30));
          break;
      }
      // The invariant: the stored email is always the one the legitimate
      // user last set, and the stored second password the one they chose.
      const auto& rec = *env.store.accounts.at("alice").recovery;
      REQUIRE(rec.secondary_email == email);
      REQUIRE(rec.second_password == true_second);
    }
  }
}
