#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dhlink/crypto.hpp"
#include "dhlink/json.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

struct MicroserviceProfile {
  std::string service_id;
  std::string credential_fingerprint;  // sha256 hex of the api key
  std::string owner_app_id;
};

struct AccessControlEntry {
  std::string service_id;
  std::string topic;
  std::string operation;                  // send | receive
  std::optional<std::string> section_id;  // present iff receive

  bool operator==(const AccessControlEntry&) const = default;
};

Json acl_entry_to_json(const AccessControlEntry& entry);
AccessControlEntry acl_entry_from_json(const Json& doc);

// Access-control authorizer: microservice profiles, the admin-maintained ACL,
// and an append-only audit trail of decisions. Profiles and ACL are rewritten
// atomically on change; authorize reflects mutations immediately.
class SecurityCore {
 public:
  explicit SecurityCore(std::string data_dir,
                        util::Clock clock = util::system_clock());

  void register_profile(const std::string& service_id,
                        const std::string& api_key,
                        const std::string& owner_app_id);
  void remove_profile(const std::string& service_id);
  std::vector<MicroserviceProfile> list_profiles() const;

  // Throws UnknownService / BadCredential.
  MicroserviceProfile authenticate(const std::string& service_id,
                                   const std::string& api_key) const;

  // Pure decision; deny is a value, never an error. Every call is logged.
  bool authorize(const std::string& service_id, const std::string& topic,
                 const std::string& operation,
                 const std::optional<std::string>& section_id);

  void add_acl_entry(const AccessControlEntry& entry);
  void remove_acl_entry(const AccessControlEntry& entry);
  std::vector<AccessControlEntry> list_acl() const;

  bool has_entry(const AccessControlEntry& entry) const;
  int64_t authorize_calls() const;

  static std::string fingerprint(const std::string& api_key);

 private:
  void save_profiles_locked() const;
  void save_acl_locked() const;
  void load();

  std::string data_dir_;
  util::Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, MicroserviceProfile> profiles_;
  std::vector<AccessControlEntry> acl_;
  mutable std::mutex audit_mutex_;
  int64_t authorize_calls_ = 0;
};

struct PublicKeyResult {
  std::string key_id;
  crypto::Bytes public_key;
};

struct PrivateKeyResult {
  std::string key_id;
  crypto::Bytes private_key;
};

// Encryption management: section-scoped keypairs with single-active-key
// rotation. The key store file is the only place private keys are persisted;
// it is written with owner-only permissions. Lookup counters exist so the
// connector key cache's effect on management traffic is measurable.
class KeyManagementCore {
 public:
  explicit KeyManagementCore(std::string data_dir,
                             util::Clock clock = util::system_clock());

  // Throws ActiveKeyExists when an active key is present and rotate is false;
  // with rotate the old key flips to revoked in the same commit.
  PublicKeyResult generate_keypair(const std::string& topic,
                                   const std::string& section_id, bool rotate);

  // Throw NotFound when no active key exists for the pair.
  PublicKeyResult active_public(const std::string& topic,
                                const std::string& section_id);
  PrivateKeyResult active_private(const std::string& topic,
                                  const std::string& section_id);

  // Revokes and removes every keypair of the section in one commit;
  // returns how many records went away.
  int64_t revoke_section(const std::string& topic,
                         const std::string& section_id);

  // Lookup counts by (topic, section, kind) plus totals, kind in
  // {public, private}.
  Json stats() const;

  struct KeyPairRecord {
    std::string key_id;
    std::string topic;
    std::string section_id;
    crypto::Bytes public_key;
    crypto::Bytes private_key;
    int64_t created_at = 0;
    std::string status;  // active | revoked
    std::string suite;
  };

  std::vector<KeyPairRecord> list_records() const;

 private:
  void save_locked() const;
  void load();

  std::string data_dir_;
  util::Clock clock_;
  mutable std::shared_mutex mutex_;
  std::vector<KeyPairRecord> records_;
  std::map<std::string, int64_t> generations_;  // topic/section -> count
  mutable std::mutex stats_mutex_;
  std::map<std::string, int64_t> lookup_counts_;
  int64_t public_lookups_ = 0;
  int64_t private_lookups_ = 0;
};

}  // namespace dhlink
