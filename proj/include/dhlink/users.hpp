#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

struct UserRecord {
  std::string user_id;
  std::string display_name;
  std::string credential_fingerprint;
  std::vector<std::string> roles;
};

void to_json(Json& j, const UserRecord& u);
void from_json(const Json& j, UserRecord& u);

// End-user accounts with stable de-identification tokens. The token is a
// keyed hash of the user id, so data keyed by token never carries profile
// fields and the mapping cannot be walked back without the service secret.
class UserDirectory {
 public:
  // Loads users.jsonl from data_dir. The de-identification secret is read
  // from deid_secret in data_dir, or created there (mode 0600) on first
  // use; pass a hex string to fix it, e.g. for reproducible runs.
  UserDirectory(std::string data_dir, std::string secret_hex = "");

  // Returns the new user id (u-0001, u-0002, ...). Display names are
  // unique; reusing one is a duplicate-user error.
  std::string register_user(const std::string& display_name,
                            const std::string& password,
                            const std::vector<std::string>& roles);

  // Returns the user id on success; bad-credential otherwise.
  std::string authenticate_user(const std::string& display_name,
                                const std::string& password) const;

  // Stable 32-hex-char token for the user id.
  std::string deid_token(const std::string& user_id) const;

  const UserRecord& user(const std::string& user_id) const;
  std::vector<UserRecord> list_users() const;

 private:
  void save() const;

  std::string data_dir_;
  std::string secret_;
  std::map<std::string, UserRecord> users_;          // by user id
  std::map<std::string, std::string> by_name_;       // display name -> id
  int64_t next_serial_ = 1;
};

}  // namespace dhlink
