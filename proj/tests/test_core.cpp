#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <set>

#include "oracle.hpp"
#include "vps/core.hpp"

using namespace vps;

TEST_CASE("wrap_index cycles 1-based positions") {
  CHECK(wrap_index(1, 4) == 2);
  CHECK(wrap_index(4, 4) == 1);
  CHECK(wrap_index(2, 3) == 3);
  CHECK_THROWS_AS(wrap_index(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(wrap_index(5, 4), std::invalid_argument);
}

TEST_CASE("is_valid_multiplier checks coprimality") {
  CHECK(is_valid_multiplier(3, 10));
  CHECK_FALSE(is_valid_multiplier(5, 10));
  for (int z : {2, 7, 10, 36, 95}) CHECK(is_valid_multiplier(1, z));
  CHECK_FALSE(is_valid_multiplier(0, 10));  // gcd(0, 10) = 10
}

TEST_CASE("alphabet encode/decode") {
  Alphabet dec = decimal_alphabet();
  CHECK(dec.encode("037") == DigitVec{0, 3, 7});
  CHECK(Alphabet("ab").encode("ba") == DigitVec{1, 0});
  CHECK_THROWS_WITH(dec.encode("3x"),
                    Catch::Matchers::ContainsSubstring("position 2"));

  SECTION("bijection on random strings") {
    Rng rng(7);
    Alphabet alpha = printable_alphabet();
    for (int trial = 0; trial < 200; ++trial) {
      std::string text;
      for (int i = 0; i < 12; ++i) {
        text.push_back(alpha.symbol_of(static_cast<int>(rng.below(95))));
      }
      CHECK(alpha.decode(alpha.encode(text)) == text);
    }
  }

  SECTION("residue/symbol round trip") {
    Alphabet alpha = lower_digits_alphabet();
    for (int r = 0; r < alpha.size(); ++r) {
      CHECK(alpha.residue_of(alpha.symbol_of(r)) == r);
    }
  }

  CHECK_THROWS_AS(Alphabet("aa"), std::invalid_argument);
  CHECK_THROWS_AS(Alphabet("x"), std::invalid_argument);
}

TEST_CASE("digit list codec") {
  CHECK(format_digits({3, 7}) == "3,7");
  CHECK(parse_digits("3,7") == DigitVec{3, 7});
  CHECK(parse_digits("0") == DigitVec{0});
  CHECK_THROWS_AS(parse_digits(""), ParseError);
  CHECK_THROWS_AS(parse_digits("3,,7"), ParseError);
  CHECK_THROWS_AS(parse_digits("3, 7"), ParseError);
  CHECK_THROWS_AS(parse_digits("3,x"), ParseError);
}

TEST_CASE("compute_response_original matches the hand-checked values") {
  // All-zero fixed point.
  auto zero = SecretCredential::checked({0, 0}, 1, 10);
  CHECK(compute_response_original(zero, Salt{{0, 0}}, SessionNonce{0}, 10) ==
        Response{{0, 0}});

  auto cred = SecretCredential::checked({3, 7}, 3, 10);
  CHECK(compute_response_original(cred, Salt{{2, 9}}, SessionNonce{4}, 10) ==
        Response{{2, 9}});

  auto cred3 = SecretCredential::checked({1, 2, 3}, 2, 5);
  CHECK(compute_response_original(cred3, Salt{{0, 1, 2}}, SessionNonce{1}, 5) ==
        Response{{0, 2, 1}});

  CHECK_THROWS_AS(
      compute_response_original(cred, Salt{{1, 2, 3}}, SessionNonce{0}, 10),
      std::invalid_argument);

  SECTION("agrees with the independent oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
      int z = 2 + static_cast<int>(rng.below(94));
      int n = 2 + static_cast<int>(rng.below(7));
      DigitVec x(n), y(n);
      for (int& d : x) d = static_cast<int>(rng.below(z));
      for (int& d : y) d = static_cast<int>(rng.below(z));
      int a;
      do {
        a = static_cast<int>(rng.below(z));
      } while (std::gcd(a, z) != 1);
      int c = static_cast<int>(rng.below(z));
      auto got = compute_response_original(SecretCredential{x, a}, Salt{y},
                                           SessionNonce{c}, z);
      CHECK(got.digits == oracle::response_original(x, a, y, c, z));
    }
  }
}

TEST_CASE("verify_original scans c and reports the smallest match") {
  auto cred = SecretCredential::checked({3, 7}, 3, 10);
  Salt salt{{2, 9}};
  auto vr = verify_original(cred, salt, Response{{2, 9}}, 10);
  REQUIRE(vr.accepted);
  CHECK(vr.matched_c ==
        oracle::verify_original({3, 7}, 3, {2, 9}, {2, 9}, 10).value());

  auto zero = SecretCredential::checked({0, 0}, 1, 10);
  auto vr0 = verify_original(zero, Salt{{0, 0}}, Response{{0, 0}}, 10);
  REQUIRE(vr0.accepted);
  CHECK(vr0.matched_c == 0);

  auto odd = verify_original(zero, Salt{{0, 0}}, Response{{0, 1}}, 10);
  auto expect = oracle::verify_original({0, 0}, 1, {0, 0}, {0, 1}, 10);
  CHECK(odd.accepted == expect.has_value());

  CHECK_THROWS_AS(verify_original(cred, salt, Response{{1, 2, 3}}, 10),
                  std::invalid_argument);
}

TEST_CASE("modified scheme") {
  auto cred = SecretCredential::checked({3, 7}, 3, 10);
  Salt salt{{2, 9}};
  CHECK(compute_response_modified(cred, salt, 10) == Response{{8, 3}});
  CHECK(verify_modified(cred, salt, Response{{8, 3}}, 10));

  auto zero = SecretCredential::checked({0, 0}, 1, 10);
  CHECK(compute_response_modified(zero, Salt{{0, 0}}, 10) == Response{{0, 0}});

  SECTION("equals original at c = 0, and perturbation rejects") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      int z = 2 + static_cast<int>(rng.below(94));
      int n = 2 + static_cast<int>(rng.below(7));
      DigitVec x(n), y(n);
      for (int& d : x) d = static_cast<int>(rng.below(z));
      for (int& d : y) d = static_cast<int>(rng.below(z));
      int a;
      do {
        a = static_cast<int>(rng.below(z));
      } while (std::gcd(a, z) != 1);
      SecretCredential cred2{x, a};
      Response k = compute_response_modified(cred2, Salt{y}, z);
      CHECK(k == compute_response_original(cred2, Salt{y}, SessionNonce{0}, z));
      CHECK(verify_modified(cred2, Salt{y}, k, z));
      Response bad = k;
      int pos = static_cast<int>(rng.below(n));
      bad.digits[pos] = (bad.digits[pos] + 1) % z;
      CHECK_FALSE(verify_modified(cred2, Salt{y}, bad, z));
    }
  }
}

TEST_CASE("round trips and range closure") {
  Rng rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    int z = 2 + static_cast<int>(rng.below(94));
    int n = 2 + static_cast<int>(rng.below(7));
    DigitVec x(n), y(n);
    for (int& d : x) d = static_cast<int>(rng.below(z));
    for (int& d : y) d = static_cast<int>(rng.below(z));
    int a;
    do {
      a = static_cast<int>(rng.below(z));
    } while (std::gcd(a, z) != 1);
    int c = static_cast<int>(rng.below(z));
    SecretCredential cred{x, a};
    Salt salt{y};
    Response k = compute_response_original(cred, salt, SessionNonce{c}, z);
    for (int d : k.digits) {
      CHECK(d >= 0);
      CHECK(d < z);
    }
    auto vr = verify_original(cred, salt, k, z);
    REQUIRE(vr.accepted);
    // Smallest-c tie-break: the match must reproduce the response.
    CHECK(compute_response_original(cred, salt, SessionNonce{vr.matched_c}, z) ==
          k);
    CHECK(vr.matched_c <= c);
  }
}

TEST_CASE("random_salt and random_nonce are seeded and uniform") {
  Alphabet dec = decimal_alphabet();
  Rng a(99), b(99);
  CHECK(random_salt(4, dec, a) == random_salt(4, dec, b));
  CHECK(random_nonce(dec, a).c == random_nonce(dec, b).c);
  Rng c(99), d(100);
  CHECK(random_salt(8, dec, c).digits != random_salt(8, dec, d).digits);

  CHECK_THROWS_AS(random_salt(1, dec, a), std::invalid_argument);

  SECTION("residue frequencies within 5 sigma of uniform") {
    Rng rng(4242);
    const int draws = 100000;
    std::vector<int> counts(10, 0);
    for (int i = 0; i < draws / 2; ++i) {
      for (int digit : random_salt(2, dec, rng).digits) ++counts[digit];
    }
    double expected = draws / 10.0;
    double sigma = std::sqrt(draws * 0.1 * 0.9);
    for (int r = 0; r < 10; ++r) {
      CHECK(std::abs(counts[r] - expected) < 5 * sigma);
    }
  }
}

TEST_CASE("honest-reject bound at Z=5, n=3") {
  // A random response can only hit one of the <= Z reachable K values.
  Rng rng(555);
  SecretCredential cred{{1, 2, 3}, 2};
  Salt salt{{0, 1, 2}};
  const int trials = 10000;
  int accepted = 0;
  for (int t = 0; t < trials; ++t) {
    DigitVec k(3);
    for (int& d : k) d = static_cast<int>(rng.below(5));
    if (verify_original(cred, salt, Response{std::move(k)}, 5).accepted) {
      ++accepted;
    }
  }
  double rate = static_cast<double>(accepted) / trials;
  double sigma = std::sqrt(0.04 * 0.96 / trials);
  CHECK(rate <= 0.04 + 3 * sigma);

  std::set<DigitVec> reachable;
  for (int c = 0; c < 5; ++c) {
    reachable.insert(
        compute_response_original(cred, salt, SessionNonce{c}, 5).digits);
  }
  CHECK(reachable.size() <= 5);
}

TEST_CASE("exhaustive oracle equivalence at Z=5, n=3") {
  // Every credential x every unit x every c x random salts: verify_original
  // must agree with the independent scan.
  Rng rng(777);
  Alphabet alpha("abcde");
  for (int xi = 0; xi < 125; ++xi) {
    DigitVec x{xi / 25, (xi / 5) % 5, xi % 5};
    for (int a = 1; a < 5; ++a) {
      SecretCredential cred{x, a};
      for (int rep = 0; rep < 20; ++rep) {
        Salt salt = random_salt(3, alpha, rng);
        for (int c = 0; c < 5; ++c) {
          Response k = compute_response_original(cred, salt, SessionNonce{c}, 5);
          auto vr = verify_original(cred, salt, k, 5);
          auto expect =
              oracle::verify_original(x, a, salt.digits, k.digits, 5);
          REQUIRE(vr.accepted == expect.has_value());
          CHECK(vr.matched_c == expect.value());
        }
      }
    }
  }
}

TEST_CASE("credential validation") {
  CHECK_THROWS_AS(SecretCredential::checked({1}, 1, 10), std::invalid_argument);
  CHECK_THROWS_AS(SecretCredential::checked({1, 2}, 5, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(SecretCredential::checked({1, 12}, 3, 10),
                  std::invalid_argument);
  CHECK_NOTHROW(SecretCredential::checked({0, 9}, 9, 10));
}
