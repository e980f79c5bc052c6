// Command line front end: server, user, attacker, and recovery roles
// over the virtual-password toolkit.

#include <termios.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vps/auth.hpp"
#include "vps/client.hpp"
#include "vps/core.hpp"
#include "vps/cryptanalysis.hpp"
#include "vps/envelope.hpp"
#include "vps/recovery.hpp"
#include "vps/server.hpp"
#include "vps/store.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RejectedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> clock_text;
  bool insecure_deterministic = false;

  vps::Rng make_rng() const {
    check();
    return seed ? vps::Rng(*seed) : vps::Rng();
  }

  vps::Clock make_clock() const {
    check();
    if (!clock_text) return vps::system_clock();
    auto t = vps::parse_instant(*clock_text);
    if (!t) throw UsageError("--clock: not an ISO-8601 UTC instant");
    return vps::fixed_clock(*t);
  }

  void check() const {
    if ((seed || clock_text) && !insecure_deterministic) {
      throw UsageError(
          "--seed/--clock require --insecure-deterministic (testing only)");
    }
  }
};

std::string prompt_hidden(const std::string& label) {
  std::cerr << label << ": " << std::flush;
  termios before{};
  bool tty = isatty(STDIN_FILENO) && tcgetattr(STDIN_FILENO, &before) == 0;
  if (tty) {
    termios hidden = before;
    hidden.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    tcsetattr(STDIN_FILENO, TCSAFLUSH, &hidden);
  }
  std::string line;
  std::getline(std::cin, line);
  if (tty) {
    tcsetattr(STDIN_FILENO, TCSAFLUSH, &before);
    std::cerr << "\n";
  }
  return line;
}

// Key file: line 1 the secret digits in comma form, line 2 the multiplier.
// Secrets never travel on argv.
vps::SecretCredential read_credential(const std::string& key_file, int z) {
  std::string digits_text, mult_text;
  if (!key_file.empty()) {
    std::ifstream in(key_file);
    if (!in) throw IoError("cannot read key file: " + key_file);
    std::getline(in, digits_text);
    std::getline(in, mult_text);
  } else {
    digits_text = prompt_hidden("secret digits (comma form)");
    mult_text = prompt_hidden("multiplier a");
  }
  try {
    return vps::SecretCredential::checked(vps::parse_digits(digits_text),
                                          std::stoi(mult_text), z);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("invalid credential: ") + e.what());
  }
}

vps::KeyPair read_public_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read server public key: " + path);
  std::string line;
  std::getline(in, line);
  auto env = vps::parse_envelope(line);  // same "<cipher>:<base64>" shape
  if (!env) throw IoError("malformed server public key file: " + path);
  return vps::KeyPair{env->cipher_id, env->ciphertext, ""};
}

void write_public_key(const std::string& path, const vps::KeyPair& key) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write public key file: " + path);
  out << key.cipher_id << ":" << vps::base64_encode(key.public_part) << "\n";
}

std::pair<std::string, int> parse_host_port(const std::string& text) {
  std::size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 >= text.size()) {
    throw UsageError("address must be host:port");
  }
  return {text.substr(0, colon), std::stoi(text.substr(colon + 1))};
}

vps::Scheme parse_scheme(const std::string& name) {
  auto scheme = vps::scheme_from_name(name);
  if (!scheme) throw UsageError("scheme must be ORIG, ORIG-ENC-C, or MOD");
  return *scheme;
}

vps::Store load_store_or_io(const std::string& path) {
  try {
    return vps::load_store(path);
  } catch (const vps::ParseError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::vector<vps::Transcript> read_transcripts(const std::string& path, int z,
                                              int n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read transcript file: " + path);
  std::vector<vps::Transcript> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t semi = line.find(';');
    if (semi == std::string::npos) {
      throw std::runtime_error("transcript line " + std::to_string(line_no) +
                               ": expected 'Y-digits;K-digits'");
    }
    try {
      vps::Salt salt{vps::parse_digits(line.substr(0, semi))};
      vps::Response resp{vps::parse_digits(line.substr(semi + 1))};
      if (salt.length() != n || resp.length() != n) {
        throw vps::ParseError("length != n");
      }
      vps::check_digits_in_range(salt.digits, z, "salt");
      vps::check_digits_in_range(resp.digits, z, "response");
      out.push_back(vps::Transcript{std::move(salt), std::move(resp)});
    } catch (const std::exception& e) {
      throw std::runtime_error("transcript line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  if (out.empty()) throw std::runtime_error("transcript file is empty");
  return out;
}

// Shared login exchange; returns (client, session_id) after ACCEPT.
struct LoginResult {
  std::unique_ptr<vps::LineClient> client;
  std::string session_id;
  std::string verdict_line;
  bool accepted = false;
};

LoginResult do_login(const std::string& server_addr, const std::string& user,
                     vps::Scheme scheme, const vps::SecretCredential& cred,
                     const vps::Alphabet& alphabet,
                     const std::string& server_pub_file, CommonOpts& common) {
  auto [host, port] = parse_host_port(server_addr);
  LoginResult result;
  try {
    result.client = std::make_unique<vps::LineClient>(host, port);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  vps::LineClient& client = *result.client;
  vps::Rng rng = common.make_rng();
  vps::Clock clock = common.make_clock();
  int z = alphabet.size();

  client.send_line("HELLO v1 " + user);
  auto reply = client.recv_line();
  if (!reply) throw IoError("server closed connection");
  std::istringstream iss(*reply);
  std::string verb, sid, salt_text;
  iss >> verb >> sid >> salt_text;
  if (verb == "ERR") throw RejectedError(*reply);

  std::string response_line;
  if (verb == "CHALLENGE") {
    vps::Salt salt = vps::Salt::checked(vps::parse_digits(salt_text), z);
    vps::SessionNonce nonce = vps::random_nonce(alphabet, rng);
    vps::Response k =
        vps::compute_response_original(cred, salt, nonce, z);
    response_line = "RESPONSE " + sid + " " + vps::format_digits(k.digits);
    if (scheme == vps::Scheme::orig_enc_c) {
      vps::KeyPair pub = read_public_key(server_pub_file);
      vps::Envelope env =
          vps::seal(pub.cipher_id, pub.public_part,
                    vps::encode_c_payload({nonce.c, clock()}));
      response_line += " " + vps::format_envelope(env);
    }
  } else if (verb == "SALTREQ") {
    vps::Salt salt = vps::random_salt(cred.length(), alphabet, rng);
    vps::Response k = vps::compute_response_modified(cred, salt, z);
    vps::KeyPair pub = read_public_key(server_pub_file);
    vps::Envelope env = vps::seal(pub.cipher_id, pub.public_part,
                                  vps::encode_salt_payload(salt));
    response_line = "RESPONSE " + sid + " " + vps::format_digits(k.digits) +
                    " " + vps::format_envelope(env);
  } else {
    throw IoError("unexpected server reply: " + *reply);
  }

  client.send_line(response_line);
  auto verdict = client.recv_line();
  if (!verdict) throw IoError("server closed connection");
  result.verdict_line = *verdict;
  result.session_id = sid;
  result.accepted = verdict->rfind("ACCEPT ", 0) == 0;
  return result;
}

int run(int argc, char** argv) {
  CLI::App app{"virtual password authentication toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--seed", common.seed, "fixed RNG seed (testing)");
  app.add_option("--clock", common.clock_text, "fixed UTC clock (testing)");
  app.add_flag("--insecure-deterministic", common.insecure_deterministic,
               "allow --seed/--clock overrides");

  std::string store_path, listen = "127.0.0.1:7070", alphabet_id = "decimal";
  std::string cipher_id = "sodium-sealed", key_file, server_pub, server_addr;
  std::string user, scheme_name_opt = "ORIG";

  // serve
  auto* serve = app.add_subcommand("serve", "run the authentication server");
  bool init = false;
  serve->add_option("--store", store_path, "store file")->required();
  serve->add_option("--listen", listen, "host:port to listen on");
  serve->add_option("--cipher", cipher_id, "server envelope cipher");
  serve->add_flag("--init", init, "create an empty store first");

  // respond
  auto* respond = app.add_subcommand(
      "respond", "compute the virtual password K for a salt");
  std::string salt_text;
  std::optional<int> fixed_c;
  respond->add_option("--salt", salt_text, "salt digits, comma form")
      ->required();
  respond->add_option("--scheme", scheme_name_opt, "ORIG, ORIG-ENC-C, or MOD");
  respond->add_option("--c", fixed_c, "fix the session nonce");
  respond->add_option("--alphabet", alphabet_id, "alphabet id");
  respond->add_option("--key-file", key_file, "credential file");
  respond->add_option("--server-pub", server_pub, "server public key file");

  // login
  auto* login = app.add_subcommand("login", "authenticate against a server");
  login->add_option("--server", server_addr, "server host:port")->required();
  login->add_option("--user", user, "username")->required();
  login->add_option("--scheme", scheme_name_opt, "account scheme");
  login->add_option("--alphabet", alphabet_id, "alphabet id");
  login->add_option("--key-file", key_file, "credential file");
  login->add_option("--server-pub", server_pub, "server public key file");

  // attack
  auto* attack_cmd =
      app.add_subcommand("attack", "recover keys from observed transcripts");
  std::string transcript_file;
  int opt_z = 10, opt_n = 2;
  attack_cmd->add_option("--file", transcript_file, "transcript file")
      ->required();
  attack_cmd->add_option("--z", opt_z, "alphabet size")->required();
  attack_cmd->add_option("--n", opt_n, "password length")->required();

  // attack-experiment
  auto* experiment = app.add_subcommand(
      "attack-experiment", "measure attack success rates (CSV)");
  int trials = 200, per_trial = 2;
  std::string csv_out;
  experiment->add_option("--z", opt_z, "alphabet size")->required();
  experiment->add_option("--n", opt_n, "password length")->required();
  experiment->add_option("--trials", trials, "number of random keys");
  experiment->add_option("--transcripts", per_trial, "transcripts per trial");
  experiment->add_option("--out", csv_out, "CSV output file (default stdout)");

  // register
  auto* reg = app.add_subcommand("register", "create an account in a store");
  std::string secondary_email, second_password;
  reg->add_option("--store", store_path, "store file")->required();
  reg->add_option("--user", user, "username")->required();
  reg->add_option("--alphabet", alphabet_id, "alphabet id");
  reg->add_option("--scheme", scheme_name_opt, "account scheme");
  reg->add_option("--key-file", key_file, "credential file");
  reg->add_option("--secondary-email", secondary_email, "recovery mailbox");
  reg->add_option("--second-password", second_password,
                  "password gating the secondary email");

  // set-recovery
  auto* set_rec = app.add_subcommand("set-recovery",
                                     "configure recovery on an account");
  set_rec->add_option("--store", store_path, "store file")->required();
  set_rec->add_option("--user", user, "username")->required();
  set_rec->add_option("--secondary-email", secondary_email, "recovery mailbox")
      ->required();
  set_rec->add_option("--second-password", second_password, "second password")
      ->required();

  // change-secondary-email
  auto* change_email = app.add_subcommand("change-secondary-email",
                                          "move the recovery mailbox");
  std::string new_email;
  change_email->add_option("--store", store_path, "store file")->required();
  change_email->add_option("--user", user, "username")->required();
  change_email->add_option("--second-password", second_password,
                           "second password")
      ->required();
  change_email->add_option("--new-email", new_email, "new mailbox")->required();

  // request-reset / complete-reset
  auto* req_reset =
      app.add_subcommand("request-reset", "mail a reset token to the mailbox");
  std::string kind = "primary";
  req_reset->add_option("--store", store_path, "store file")->required();
  req_reset->add_option("--user", user, "username")->required();
  req_reset->add_option("--kind", kind, "primary | second");

  auto* comp_reset =
      app.add_subcommand("complete-reset", "consume a reset token");
  std::string token, new_second_password;
  comp_reset->add_option("--store", store_path, "store file")->required();
  comp_reset->add_option("--token", token, "token from the mailbox")
      ->required();
  comp_reset->add_option("--kind", kind, "primary | second");
  comp_reset->add_option("--new-second-password", new_second_password,
                         "replacement second password");
  comp_reset->add_option("--key-file", key_file,
                         "replacement credential (primary reset)");

  // outbox / history
  auto* outbox_cmd = app.add_subcommand("outbox", "print the mock mailbox");
  outbox_cmd->add_option("--store", store_path, "store file")->required();
  outbox_cmd->add_option("--user", user, "username")->required();

  auto* history_cmd =
      app.add_subcommand("history", "log in, then list used c values");
  history_cmd->add_option("--server", server_addr, "server host:port")
      ->required();
  history_cmd->add_option("--user", user, "username")->required();
  history_cmd->add_option("--scheme", scheme_name_opt, "account scheme");
  history_cmd->add_option("--alphabet", alphabet_id, "alphabet id");
  history_cmd->add_option("--key-file", key_file, "credential file");
  history_cmd->add_option("--server-pub", server_pub, "server public key file");

  // Let the global --seed/--clock/--insecure-deterministic options appear
  // after the subcommand name, and map CLI11 parse failures to exit code 2.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  common.check();

  if (serve->parsed()) {
    vps::Rng rng = common.make_rng();
    if (init) {
      vps::Store fresh = vps::make_store(cipher_id, rng);
      vps::save_store(fresh, store_path);
      write_public_key(store_path + ".pub", fresh.server_key);
    }
    vps::Store store = load_store_or_io(store_path);
    auto persist = [store_path](const vps::Store& s) {
      vps::save_store(s, store_path);
    };
    vps::AuthService auth(std::move(store), std::move(rng),
                          common.make_clock(), persist);
    auto [host, port] = parse_host_port(listen);
    try {
      vps::TcpServer server(auth, host, port);
      std::cerr << "listening on " << host << ":" << server.port() << "\n";
      server.run();
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
    return kExitOk;
  }

  if (respond->parsed()) {
    vps::Alphabet alphabet(vps::builtin_alphabets().at(alphabet_id));
    int z = alphabet.size();
    vps::Scheme scheme = parse_scheme(scheme_name_opt);
    vps::SecretCredential cred = read_credential(key_file, z);
    vps::Salt salt = vps::Salt::checked(vps::parse_digits(salt_text), z);
    if (salt.length() != cred.length()) {
      throw std::runtime_error("salt length does not match credential length");
    }
    vps::Rng rng = common.make_rng();
    vps::Clock clock = common.make_clock();
    if (scheme == vps::Scheme::mod) {
      vps::Response k = vps::compute_response_modified(cred, salt, z);
      std::cout << vps::format_digits(k.digits) << "\n";
      if (server_pub.empty()) throw UsageError("MOD needs --server-pub");
      vps::KeyPair pub = read_public_key(server_pub);
      std::cout << vps::format_envelope(vps::seal(
                       pub.cipher_id, pub.public_part,
                       vps::encode_salt_payload(salt)))
                << "\n";
    } else {
      int c = fixed_c ? *fixed_c : vps::random_nonce(alphabet, rng).c;
      if (c < 0 || c >= z) throw UsageError("--c out of range");
      vps::Response k =
          vps::compute_response_original(cred, salt, vps::SessionNonce{c}, z);
      std::cout << vps::format_digits(k.digits) << "\n";
      if (scheme == vps::Scheme::orig_enc_c) {
        if (server_pub.empty()) throw UsageError("ORIG-ENC-C needs --server-pub");
        vps::KeyPair pub = read_public_key(server_pub);
        std::cout << vps::format_envelope(vps::seal(
                         pub.cipher_id, pub.public_part,
                         vps::encode_c_payload({c, clock()})))
                  << "\n";
      }
    }
    return kExitOk;
  }

  if (login->parsed() || history_cmd->parsed()) {
    vps::Alphabet alphabet(vps::builtin_alphabets().at(alphabet_id));
    vps::Scheme scheme = parse_scheme(scheme_name_opt);
    vps::SecretCredential cred = read_credential(key_file, alphabet.size());
    LoginResult result = do_login(server_addr, user, scheme, cred, alphabet,
                                  server_pub, common);
    std::cout << result.verdict_line << "\n";
    if (!result.accepted) return kExitDomain;
    if (history_cmd->parsed()) {
      result.client->send_line("HISTORY " + result.session_id);
      while (auto line = result.client->recv_line()) {
        if (*line == "END") break;
        std::cout << *line << "\n";
      }
    }
    return kExitOk;
  }

  if (attack_cmd->parsed()) {
    auto transcripts = read_transcripts(transcript_file, opt_z, opt_n);
    vps::AttackReport report = vps::attack(transcripts, opt_z, opt_n);
    std::cout << "transcripts: " << transcripts.size() << "\n";
    std::cout << "candidates: " << report.candidates.size() << "\n";
    std::size_t shown = 0;
    for (const auto& cand : report.candidates) {
      if (shown++ == 50) {
        std::cout << "... (" << report.candidates.size() - 50 << " more)\n";
        break;
      }
      std::cout << "  X=" << vps::format_digits(cand.digits)
                << " a=" << cand.multiplier << "\n";
    }
    std::cout << "work: " << report.work << " (a,c) pairs\n";
    return kExitOk;
  }

  if (experiment->parsed()) {
    vps::Rng rng = common.make_rng();
    auto result =
        vps::attack_success_experiment(opt_z, opt_n, trials, per_trial, rng);
    std::ostringstream csv;
    csv << vps::experiment_csv_header() << "\n"
        << vps::experiment_csv_row(result) << "\n";
    if (csv_out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(csv_out, std::ios::trunc);
      if (!out) throw IoError("cannot write " + csv_out);
      out << csv.str();
    }
    return kExitOk;
  }

  // Store-mutating admin subcommands share load/save bracketing.
  vps::Store store = load_store_or_io(store_path);
  vps::Rng rng = common.make_rng();
  vps::Clock clock = common.make_clock();

  if (reg->parsed()) {
    if (secondary_email.empty() != second_password.empty()) {
      throw UsageError(
          "--secondary-email and --second-password must be set together");
    }
    int z = store.alphabet(alphabet_id).size();
    vps::SecretCredential cred = read_credential(key_file, z);
    if (store.accounts.count(user)) {
      throw vps::DomainError("DUPLICATE-USER", user);
    }
    vps::AccountRecord acc;
    acc.username = user;
    acc.credential = std::move(cred);
    acc.alphabet_id = alphabet_id;
    acc.scheme = parse_scheme(scheme_name_opt);
    if (!secondary_email.empty()) {
      acc.recovery =
          vps::RecoveryFields{secondary_email, second_password, {}};
    }
    store.accounts.emplace(user, std::move(acc));
  } else if (set_rec->parsed()) {
    auto it = store.accounts.find(user);
    if (it == store.accounts.end()) {
      throw vps::DomainError("UNKNOWN-USER", user);
    }
    if (it->second.recovery) {
      throw vps::DomainError("RECOVERY-ALREADY-CONFIGURED", user);
    }
    it->second.recovery =
        vps::RecoveryFields{secondary_email, second_password, {}};
  } else if (change_email->parsed()) {
    vps::change_secondary_email(store, user, second_password, new_email);
  } else if (req_reset->parsed()) {
    vps::OutboxMessage msg =
        kind == "second"
            ? vps::request_second_password_reset(store, user, rng, clock)
            : vps::request_primary_reset(store, user, rng, clock);
    std::cout << "sent " << vps::token_kind_name(msg.kind) << " token to "
              << msg.to << " at " << vps::format_instant(msg.sent_at) << "\n";
  } else if (comp_reset->parsed()) {
    if (kind == "second") {
      if (new_second_password.empty()) {
        throw UsageError("second reset needs --new-second-password");
      }
      vps::complete_second_password_reset(store, token, new_second_password,
                                          clock);
    } else {
      auto it_acc = std::find_if(
          store.accounts.begin(), store.accounts.end(), [&](const auto& kv) {
            const auto& rec = kv.second.recovery;
            if (!rec) return false;
            for (const auto& t : rec->pending_tokens) {
              if (t.token == token) return true;
            }
            return false;
          });
      if (it_acc == store.accounts.end()) {
        throw vps::DomainError("UNKNOWN-TOKEN", token);
      }
      int z = store.alphabet(it_acc->second.alphabet_id).size();
      vps::SecretCredential fresh = read_credential(key_file, z);
      vps::complete_primary_reset(store, token, fresh.digits,
                                  fresh.multiplier, clock);
    }
    std::cout << "reset complete\n";
  } else if (outbox_cmd->parsed()) {
    auto it = store.accounts.find(user);
    if (it == store.accounts.end()) {
      throw vps::DomainError("UNKNOWN-USER", user);
    }
    for (const auto& m : it->second.outbox) {
      std::cout << vps::format_instant(m.sent_at) << " to=" << m.to
                << " kind=" << vps::token_kind_name(m.kind)
                << " token=" << m.token << "\n";
    }
    return kExitOk;  // read-only, skip the save below
  }

  vps::save_store(store, store_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const RejectedError& e) {
    std::cerr << e.what() << "\n";
    return kExitDomain;
  } catch (const vps::DomainError& e) {
    std::cerr << e.code << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
