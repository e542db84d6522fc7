#include "dhlink/security.hpp"

#include <algorithm>
#include <fstream>

#include "dhlink/canonical.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

constexpr const char* kProfilesFile = "/profiles.jsonl";
constexpr const char* kAclFile = "/acl.jsonl";
constexpr const char* kAuditFile = "/audit.jsonl";
constexpr const char* kKeyStoreFile = "/key_store.jsonl";

void check_operation(const std::string& operation) {
  if (operation != "send" && operation != "receive")
    fail(ErrorCode::BadRequest, "operation must be send or receive");
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::vector<Json> out;
  if (!util::file_exists(path)) return out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json doc = Json::parse(line, nullptr, false);
    if (!doc.is_discarded()) out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace

Json acl_entry_to_json(const AccessControlEntry& entry) {
  Json doc = Json::object();
  doc["serviceId"] = entry.service_id;
  doc["topic"] = entry.topic;
  doc["operation"] = entry.operation;
  if (entry.section_id) doc["sectionId"] = *entry.section_id;
  return doc;
}

AccessControlEntry acl_entry_from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::BadRequest, "ACL entry must be an object");
  AccessControlEntry entry;
  for (const char* key : {"serviceId", "topic", "operation"}) {
    if (!doc.contains(key) || !doc[key].is_string())
      fail(ErrorCode::BadRequest, std::string("ACL entry needs string ") + key);
  }
  entry.service_id = doc["serviceId"].get<std::string>();
  entry.topic = doc["topic"].get<std::string>();
  entry.operation = doc["operation"].get<std::string>();
  check_operation(entry.operation);
  if (doc.contains("sectionId")) {
    if (!doc["sectionId"].is_string())
      fail(ErrorCode::BadRequest, "sectionId must be a string");
    entry.section_id = doc["sectionId"].get<std::string>();
  }
  if (!util::is_valid_identifier(entry.service_id))
    fail(ErrorCode::BadRequest, "invalid serviceId");
  if (!util::is_valid_topic_name(entry.topic))
    fail(ErrorCode::BadRequest, "invalid topic name");
  if (entry.operation == "receive") {
    if (!entry.section_id)
      fail(ErrorCode::BadRequest, "receive entries need a sectionId");
    if (!util::is_valid_identifier(*entry.section_id))
      fail(ErrorCode::BadRequest, "invalid sectionId");
  } else if (entry.section_id) {
    fail(ErrorCode::BadRequest, "send entries carry no sectionId");
  }
  return entry;
}

SecurityCore::SecurityCore(std::string data_dir, util::Clock clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  util::ensure_dir(data_dir_);
  load();
}

std::string SecurityCore::fingerprint(const std::string& api_key) {
  return crypto::sha256_hex(api_key);
}

void SecurityCore::load() {
  for (const auto& doc : read_jsonl(data_dir_ + kProfilesFile)) {
    MicroserviceProfile profile;
    profile.service_id = doc["serviceId"].get<std::string>();
    profile.credential_fingerprint = doc["fingerprint"].get<std::string>();
    profile.owner_app_id = doc.value("ownerAppId", "");
    profiles_[profile.service_id] = profile;
  }
  for (const auto& doc : read_jsonl(data_dir_ + kAclFile))
    acl_.push_back(acl_entry_from_json(doc));
}

void SecurityCore::save_profiles_locked() const {
  std::string body;
  for (const auto& [id, profile] : profiles_) {
    (void)id;
    Json doc = Json::object();
    doc["serviceId"] = profile.service_id;
    doc["fingerprint"] = profile.credential_fingerprint;
    doc["ownerAppId"] = profile.owner_app_id;
    body += canonical_encode(doc) + "\n";
  }
  util::write_file_atomic(data_dir_ + kProfilesFile, body);
}

void SecurityCore::save_acl_locked() const {
  std::string body;
  for (const auto& entry : acl_)
    body += canonical_encode(acl_entry_to_json(entry)) + "\n";
  util::write_file_atomic(data_dir_ + kAclFile, body);
}

void SecurityCore::register_profile(const std::string& service_id,
                                    const std::string& api_key,
                                    const std::string& owner_app_id) {
  if (!util::is_valid_identifier(service_id))
    fail(ErrorCode::BadRequest, "invalid serviceId");
  if (api_key.empty()) fail(ErrorCode::BadRequest, "empty api key");
  std::unique_lock lock(mutex_);
  if (profiles_.count(service_id))
    fail(ErrorCode::DuplicateName, "service exists: " + service_id);
  MicroserviceProfile profile;
  profile.service_id = service_id;
  profile.credential_fingerprint = fingerprint(api_key);
  profile.owner_app_id = owner_app_id;
  profiles_[service_id] = profile;
  save_profiles_locked();
}

void SecurityCore::remove_profile(const std::string& service_id) {
  std::unique_lock lock(mutex_);
  if (!profiles_.erase(service_id))
    fail(ErrorCode::UnknownService, "unknown service: " + service_id);
  save_profiles_locked();
}

std::vector<MicroserviceProfile> SecurityCore::list_profiles() const {
  std::shared_lock lock(mutex_);
  std::vector<MicroserviceProfile> out;
  for (const auto& [id, profile] : profiles_) {
    (void)id;
    out.push_back(profile);
  }
  return out;
}

MicroserviceProfile SecurityCore::authenticate(const std::string& service_id,
                                               const std::string& api_key) const {
  std::shared_lock lock(mutex_);
  auto it = profiles_.find(service_id);
  if (it == profiles_.end())
    fail(ErrorCode::UnknownService, "unknown service: " + service_id);
  if (it->second.credential_fingerprint != fingerprint(api_key))
    fail(ErrorCode::BadCredential, "credential mismatch for " + service_id);
  return it->second;
}

bool SecurityCore::authorize(const std::string& service_id,
                             const std::string& topic,
                             const std::string& operation,
                             const std::optional<std::string>& section_id) {
  check_operation(operation);
  bool allow = false;
  {
    std::shared_lock lock(mutex_);
    for (const auto& entry : acl_) {
      if (entry.service_id != service_id || entry.topic != topic ||
          entry.operation != operation)
        continue;
      if (operation == "send") {
        allow = true;
        break;
      }
      if (section_id && entry.section_id == *section_id) {
        allow = true;
        break;
      }
    }
  }
  Json event = Json::object();
  event["at"] = clock_();
  event["serviceId"] = service_id;
  event["topic"] = topic;
  event["operation"] = operation;
  if (section_id) event["sectionId"] = *section_id;
  event["decision"] = allow ? "allow" : "deny";
  {
    std::lock_guard lock(audit_mutex_);
    std::ofstream out(data_dir_ + kAuditFile, std::ios::app);
    out << canonical_encode(event) << "\n";
    ++authorize_calls_;
  }
  return allow;
}

void SecurityCore::add_acl_entry(const AccessControlEntry& entry) {
  acl_entry_from_json(acl_entry_to_json(entry));  // shape check
  std::unique_lock lock(mutex_);
  if (std::find(acl_.begin(), acl_.end(), entry) != acl_.end())
    fail(ErrorCode::DuplicateEntry, "ACL entry already present");
  acl_.push_back(entry);
  save_acl_locked();
}

void SecurityCore::remove_acl_entry(const AccessControlEntry& entry) {
  std::unique_lock lock(mutex_);
  auto it = std::find(acl_.begin(), acl_.end(), entry);
  if (it == acl_.end()) fail(ErrorCode::UnknownEntry, "no such ACL entry");
  acl_.erase(it);
  save_acl_locked();
}

std::vector<AccessControlEntry> SecurityCore::list_acl() const {
  std::shared_lock lock(mutex_);
  return acl_;
}

bool SecurityCore::has_entry(const AccessControlEntry& entry) const {
  std::shared_lock lock(mutex_);
  return std::find(acl_.begin(), acl_.end(), entry) != acl_.end();
}

int64_t SecurityCore::authorize_calls() const {
  std::lock_guard lock(audit_mutex_);
  return authorize_calls_;
}

KeyManagementCore::KeyManagementCore(std::string data_dir, util::Clock clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  crypto::init();
  util::ensure_dir(data_dir_);
  load();
}

void KeyManagementCore::load() {
  for (const auto& doc : read_jsonl(data_dir_ + kKeyStoreFile)) {
    KeyPairRecord record;
    record.key_id = doc["keyId"].get<std::string>();
    record.topic = doc["topic"].get<std::string>();
    record.section_id = doc["sectionId"].get<std::string>();
    std::string pub = util::base64url_decode(doc["publicKey"].get<std::string>());
    std::string sec = util::base64url_decode(doc["privateKey"].get<std::string>());
    record.public_key.assign(pub.begin(), pub.end());
    record.private_key.assign(sec.begin(), sec.end());
    record.created_at = doc["createdAt"].get<int64_t>();
    record.status = doc["status"].get<std::string>();
    record.suite = doc.value("suite", crypto::kSuiteId);
    ++generations_[record.topic + "/" + record.section_id];
    records_.push_back(std::move(record));
  }
}

void KeyManagementCore::save_locked() const {
  std::string body;
  for (const auto& record : records_) {
    Json doc = Json::object();
    doc["keyId"] = record.key_id;
    doc["topic"] = record.topic;
    doc["sectionId"] = record.section_id;
    doc["publicKey"] = util::base64url_encode(
        std::string(record.public_key.begin(), record.public_key.end()));
    doc["privateKey"] = util::base64url_encode(
        std::string(record.private_key.begin(), record.private_key.end()));
    doc["createdAt"] = record.created_at;
    doc["status"] = record.status;
    doc["suite"] = record.suite;
    body += canonical_encode(doc) + "\n";
  }
  std::string path = data_dir_ + kKeyStoreFile;
  util::write_file_atomic(path, body);
  util::restrict_permissions(path);
}

PublicKeyResult KeyManagementCore::generate_keypair(
    const std::string& topic, const std::string& section_id, bool rotate) {
  if (!util::is_valid_topic_name(topic))
    fail(ErrorCode::BadRequest, "invalid topic name");
  if (!util::is_valid_identifier(section_id))
    fail(ErrorCode::BadRequest, "invalid sectionId");
  std::unique_lock lock(mutex_);
  KeyPairRecord* active = nullptr;
  for (auto& record : records_)
    if (record.topic == topic && record.section_id == section_id &&
        record.status == "active")
      active = &record;
  if (active && !rotate)
    fail(ErrorCode::ActiveKeyExists,
         "active key exists for " + topic + "/" + section_id);
  int64_t generation = ++generations_[topic + "/" + section_id];
  crypto::KeyPair pair = crypto::generate_keypair();
  KeyPairRecord record;
  record.key_id =
      "k-" + crypto::sha256_hex(topic + "|" + section_id + "|" +
                                std::to_string(generation))
                 .substr(0, 12);
  record.topic = topic;
  record.section_id = section_id;
  record.public_key = pair.public_key;
  record.private_key = pair.secret_key;
  record.created_at = clock_();
  record.status = "active";
  record.suite = crypto::kSuiteId;
  if (active) active->status = "revoked";
  records_.push_back(record);
  save_locked();
  return {record.key_id, record.public_key};
}

PublicKeyResult KeyManagementCore::active_public(
    const std::string& topic, const std::string& section_id) {
  {
    std::lock_guard lock(stats_mutex_);
    ++public_lookups_;
    ++lookup_counts_[topic + "/" + section_id + "/public"];
  }
  std::shared_lock lock(mutex_);
  for (const auto& record : records_)
    if (record.topic == topic && record.section_id == section_id &&
        record.status == "active")
      return {record.key_id, record.public_key};
  fail(ErrorCode::NotFound, "no active key for " + topic + "/" + section_id);
}

PrivateKeyResult KeyManagementCore::active_private(
    const std::string& topic, const std::string& section_id) {
  {
    std::lock_guard lock(stats_mutex_);
    ++private_lookups_;
    ++lookup_counts_[topic + "/" + section_id + "/private"];
  }
  std::shared_lock lock(mutex_);
  for (const auto& record : records_)
    if (record.topic == topic && record.section_id == section_id &&
        record.status == "active")
      return {record.key_id, record.private_key};
  fail(ErrorCode::NotFound, "no active key for " + topic + "/" + section_id);
}

int64_t KeyManagementCore::revoke_section(const std::string& topic,
                                          const std::string& section_id) {
  std::unique_lock lock(mutex_);
  int64_t removed = 0;
  for (auto it = records_.begin(); it != records_.end();) {
    if (it->topic == topic && it->section_id == section_id) {
      it->status = "revoked";
      it = records_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  if (removed > 0) save_locked();
  return removed;
}

Json KeyManagementCore::stats() const {
  std::lock_guard lock(stats_mutex_);
  Json doc = Json::object();
  doc["publicLookups"] = public_lookups_;
  doc["privateLookups"] = private_lookups_;
  Json per = Json::object();
  for (const auto& [key, count] : lookup_counts_) per[key] = count;
  doc["lookups"] = per;
  return doc;
}

std::vector<KeyManagementCore::KeyPairRecord> KeyManagementCore::list_records()
    const {
  std::shared_lock lock(mutex_);
  return records_;
}

}  // namespace dhlink
