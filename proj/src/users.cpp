#include "dhlink/users.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "dhlink/crypto.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

void to_json(Json& j, const UserRecord& u) {
  j = Json{{"userId", u.user_id},
           {"displayName", u.display_name},
           {"credentialFingerprint", u.credential_fingerprint},
           {"roles", u.roles}};
}

void from_json(const Json& j, UserRecord& u) {
  j.at("userId").get_to(u.user_id);
  j.at("displayName").get_to(u.display_name);
  j.at("credentialFingerprint").get_to(u.credential_fingerprint);
  j.at("roles").get_to(u.roles);
}

UserDirectory::UserDirectory(std::string data_dir, std::string secret_hex)
    : data_dir_(std::move(data_dir)) {
  util::ensure_dir(data_dir_);

  std::string secret_path = data_dir_ + "/deid_secret";
  if (secret_hex.empty()) {
    if (util::file_exists(secret_path)) {
      secret_hex = util::read_file(secret_path);
      while (!secret_hex.empty() && secret_hex.back() == '\n') {
        secret_hex.pop_back();
      }
    } else {
      secret_hex = util::random_hex(32);
      util::write_file_atomic(secret_path, secret_hex + "\n");
      util::restrict_permissions(secret_path);
    }
  }
  secret_ = secret_hex;

  std::ifstream in(data_dir_ + "/users.jsonl");
  std::string line;
  while (in.good() && std::getline(in, line)) {
    if (line.empty()) continue;
    Json entry = Json::parse(line, nullptr, false);
    if (entry.is_discarded()) continue;
    UserRecord u = entry.get<UserRecord>();
    by_name_[u.display_name] = u.user_id;
    if (u.user_id.size() > 2) {
      int64_t serial = std::strtoll(u.user_id.c_str() + 2, nullptr, 10);
      next_serial_ = std::max(next_serial_, serial + 1);
    }
    users_[u.user_id] = std::move(u);
  }
}

void UserDirectory::save() const {
  std::string out;
  for (const auto& [id, u] : users_) {
    out += Json(u).dump();
    out += "\n";
  }
  util::write_file_atomic(data_dir_ + "/users.jsonl", out);
}

std::string UserDirectory::register_user(
    const std::string& display_name, const std::string& password,
    const std::vector<std::string>& roles) {
  if (display_name.empty()) fail(ErrorCode::BadRequest, "empty display name");
  if (password.empty()) fail(ErrorCode::BadRequest, "empty password");
  if (by_name_.count(display_name)) {
    fail(ErrorCode::DuplicateUser,
         "a user named '" + display_name + "' already exists");
  }
  std::ostringstream id;
  id << "u-" << std::setfill('0') << std::setw(4) << next_serial_++;
  UserRecord u;
  u.user_id = id.str();
  u.display_name = display_name;
  u.credential_fingerprint = crypto::sha256_hex(password);
  u.roles = roles;
  by_name_[display_name] = u.user_id;
  users_[u.user_id] = u;
  save();
  return u.user_id;
}

std::string UserDirectory::authenticate_user(
    const std::string& display_name, const std::string& password) const {
  auto it = by_name_.find(display_name);
  if (it == by_name_.end()) {
    fail(ErrorCode::BadCredential, "unknown user or wrong password");
  }
  const UserRecord& u = users_.at(it->second);
  if (u.credential_fingerprint != crypto::sha256_hex(password)) {
    fail(ErrorCode::BadCredential, "unknown user or wrong password");
  }
  return u.user_id;
}

std::string UserDirectory::deid_token(const std::string& user_id) const {
  if (!users_.count(user_id)) {
    fail(ErrorCode::UnknownName, "no user " + user_id);
  }
  auto mac = crypto::hmac_sha256(util::from_hex(secret_), user_id);
  return util::to_hex(mac).substr(0, 32);
}

const UserRecord& UserDirectory::user(const std::string& user_id) const {
  auto it = users_.find(user_id);
  if (it == users_.end()) fail(ErrorCode::UnknownName, "no user " + user_id);
  return it->second;
}

std::vector<UserRecord> UserDirectory::list_users() const {
  std::vector<UserRecord> out;
  for (const auto& [id, u] : users_) out.push_back(u);
  return out;
}

}  // namespace dhlink
