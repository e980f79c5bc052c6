#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vps/auth.hpp"

namespace vps {

// Per-connection protocol state: which sessions this connection has
// authenticated, so HISTORY is only served after an ACCEPT.
struct WireConnection {
  std::map<std::string, std::string> accepted;  // session_id -> username
  bool close = false;
};

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string field;
  while (iss >> field) out.push_back(field);
  return out;
}

// One command line in, reply lines out. Line protocol:
//   HELLO v1 <user>                 -> CHALLENGE <sid> <salt> | SALTREQ <sid> | ERR UNKNOWN-USER
//   RESPONSE <sid> <K> [<envelope>] -> ACCEPT <sid> | REJECT <sid> <reason>
//   HISTORY <sid>                   -> CUSED lines then END (post-ACCEPT only)
class WireHandler {
 public:
  explicit WireHandler(AuthService& auth) : auth_(auth) {}

  std::vector<std::string> handle_line(WireConnection& conn,
                                       const std::string& line) {
    auto fields = split_fields(line);
    if (fields.empty()) return malformed(conn);

    if (fields[0] == "HELLO") {
      if (fields.size() != 3 || fields[1] != "v1") return malformed(conn);
      try {
        SessionState session = auth_.issue_challenge(fields[2]);
        if (session.issued_salt) {
          return {"CHALLENGE " + session.session_id + " " +
                  format_digits(session.issued_salt->digits)};
        }
        return {"SALTREQ " + session.session_id};
      } catch (const DomainError&) {
        return {"ERR UNKNOWN-USER"};
      }
    }

    if (fields[0] == "RESPONSE") {
      if (fields.size() != 3 && fields.size() != 4) return malformed(conn);
      const std::string& sid = fields[1];
      Response response;
      try {
        response.digits = parse_digits(fields[2]);
      } catch (const ParseError&) {
        return malformed(conn);
      }
      std::string owner = auth_.session_owner(sid).value_or("");
      LoginOutcome outcome =
          fields.size() == 3
              ? auth_.verify_login_original(sid, response)
              : verify_with_envelope(sid, owner, response, fields[3]);
      if (outcome.accepted) {
        conn.accepted[sid] = owner;
        return {"ACCEPT " + sid};
      }
      return {"REJECT " + sid + " " + reject_reason_name(outcome.reason)};
    }

    if (fields[0] == "HISTORY") {
      if (fields.size() != 2) return malformed(conn);
      auto it = conn.accepted.find(fields[1]);
      if (it == conn.accepted.end()) return {"ERR UNAUTHENTICATED"};
      std::vector<std::string> out;
      for (const auto& e : auth_.c_history(it->second, true)) {
        out.push_back("CUSED " + std::to_string(e.c) + " " +
                      format_instant(e.used_at));
      }
      out.push_back("END");
      return out;
    }

    return malformed(conn);
  }

 private:
  static std::vector<std::string> malformed(WireConnection& conn) {
    conn.close = true;
    return {"ERR MALFORMED"};
  }

  // Envelope form dispatches on the session owner's scheme: sealed
  // CPayload for ORIG-ENC-C, sealed SaltPayload for MOD.
  LoginOutcome verify_with_envelope(const std::string& sid,
                                    const std::string& owner,
                                    const Response& response,
                                    const std::string& envelope_wire) {
    Scheme scheme = Scheme::orig_enc_c;
    auto it = auth_.store().accounts.find(owner);
    if (it != auth_.store().accounts.end()) scheme = it->second.scheme;
    if (scheme == Scheme::mod) {
      return auth_.verify_login_modified(sid, response, envelope_wire);
    }
    return auth_.verify_login_enc_c(sid, response, envelope_wire);
  }

  AuthService& auth_;
};

}  // namespace vps
