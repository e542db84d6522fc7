#include "dhlink/security.hpp"

#include <gtest/gtest.h>

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dhlink/errors.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;
using testing::TempDir;

AccessControlEntry send_entry(const std::string& service,
                              const std::string& topic) {
  return AccessControlEntry{service, topic, "send", std::nullopt};
}

AccessControlEntry receive_entry(const std::string& service,
                                 const std::string& topic,
                                 const std::string& section) {
  return AccessControlEntry{service, topic, "receive", section};
}

TEST(Profiles, RegisterAuthenticateRemove) {
  TempDir dir;
  SecurityCore core(dir.path);
  core.register_profile("svc-a", "key-a", "app-1");

  MicroserviceProfile profile = core.authenticate("svc-a", "key-a");
  EXPECT_EQ(profile.service_id, "svc-a");
  EXPECT_EQ(profile.owner_app_id, "app-1");
  EXPECT_EQ(profile.credential_fingerprint, SecurityCore::fingerprint("key-a"));

  EXPECT_EQ(code_of([&] { core.authenticate("svc-a", "wrong"); }),
            ErrorCode::BadCredential);
  EXPECT_EQ(code_of([&] { core.authenticate("ghost", "key-a"); }),
            ErrorCode::UnknownService);
  EXPECT_EQ(code_of([&] { core.register_profile("svc-a", "other", ""); }),
            ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] { core.register_profile("bad id", "k", ""); }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { core.register_profile("svc-b", "", ""); }),
            ErrorCode::BadRequest);

  core.remove_profile("svc-a");
  EXPECT_EQ(code_of([&] { core.authenticate("svc-a", "key-a"); }),
            ErrorCode::UnknownService);
  EXPECT_EQ(code_of([&] { core.remove_profile("svc-a"); }),
            ErrorCode::UnknownService);
}

TEST(Profiles, OnlyFingerprintsArePersisted) {
  TempDir dir;
  SecurityCore core(dir.path);
  core.register_profile("svc-a", "super-secret-key", "");
  std::string stored = util::read_file(dir.path + "/profiles.jsonl");
  EXPECT_EQ(stored.find("super-secret-key"), std::string::npos);
  EXPECT_NE(stored.find(SecurityCore::fingerprint("super-secret-key")),
            std::string::npos);
}

TEST(Profiles, SurviveRestart) {
  TempDir dir;
  {
    SecurityCore core(dir.path);
    core.register_profile("svc-a", "key-a", "app-1");
  }
  SecurityCore core(dir.path);
  EXPECT_EQ(core.authenticate("svc-a", "key-a").owner_app_id, "app-1");
  EXPECT_EQ(core.list_profiles().size(), 1u);
}

TEST(AclEntries, JsonRoundTripAndValidation) {
  AccessControlEntry entry = receive_entry("svc-a", "vitals", "s-1");
  EXPECT_EQ(acl_entry_from_json(acl_entry_to_json(entry)), entry);
  AccessControlEntry sender = send_entry("svc-a", "vitals");
  EXPECT_EQ(acl_entry_from_json(acl_entry_to_json(sender)), sender);
  EXPECT_FALSE(acl_entry_to_json(sender).contains("sectionId"));

  EXPECT_EQ(code_of([] {
              acl_entry_from_json(Json{{"serviceId", "s"},
                                       {"topic", "t"},
                                       {"operation", "forward"}});
            }),
            ErrorCode::BadRequest);
  // A receive grant names its section; a send grant must not.
  EXPECT_EQ(code_of([] {
              acl_entry_from_json(Json{{"serviceId", "s"},
                                       {"topic", "t"},
                                       {"operation", "receive"}});
            }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([] {
              acl_entry_from_json(Json{{"serviceId", "s"},
                                       {"topic", "t"},
                                       {"operation", "send"},
                                       {"sectionId", "s-1"}});
            }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([] {
              acl_entry_from_json(Json{{"serviceId", "s"},
                                       {"topic", "Bad Topic"},
                                       {"operation", "send"}});
            }),
            ErrorCode::BadRequest);
}

TEST(Acl, AddRemoveListWithDuplicateDetection) {
  TempDir dir;
  SecurityCore core(dir.path);
  AccessControlEntry entry = receive_entry("svc-a", "vitals", "s-1");
  core.add_acl_entry(entry);
  EXPECT_TRUE(core.has_entry(entry));
  EXPECT_EQ(code_of([&] { core.add_acl_entry(entry); }),
            ErrorCode::DuplicateEntry);

  // Same tuple apart from the section is a distinct entry.
  core.add_acl_entry(receive_entry("svc-a", "vitals", "s-2"));
  EXPECT_EQ(core.list_acl().size(), 2u);

  core.remove_acl_entry(entry);
  EXPECT_FALSE(core.has_entry(entry));
  EXPECT_EQ(code_of([&] { core.remove_acl_entry(entry); }),
            ErrorCode::UnknownEntry);
}

TEST(Acl, SurvivesRestart) {
  TempDir dir;
  {
    SecurityCore core(dir.path);
    core.add_acl_entry(send_entry("svc-a", "vitals"));
    core.add_acl_entry(receive_entry("svc-b", "vitals", "s-1"));
  }
  SecurityCore core(dir.path);
  EXPECT_TRUE(core.has_entry(send_entry("svc-a", "vitals")));
  EXPECT_TRUE(core.has_entry(receive_entry("svc-b", "vitals", "s-1")));
}

TEST(Authorize, ExactTupleSemantics) {
  TempDir dir;
  SecurityCore core(dir.path);
  core.add_acl_entry(send_entry("svc-a", "vitals"));
  core.add_acl_entry(receive_entry("svc-b", "vitals", "s-1"));

  EXPECT_TRUE(core.authorize("svc-a", "vitals", "send", std::nullopt));
  EXPECT_FALSE(core.authorize("svc-a", "vitals", "receive", "s-1"));
  EXPECT_FALSE(core.authorize("svc-a", "alerts", "send", std::nullopt));
  EXPECT_FALSE(core.authorize("svc-c", "vitals", "send", std::nullopt));

  EXPECT_TRUE(core.authorize("svc-b", "vitals", "receive", "s-1"));
  EXPECT_FALSE(core.authorize("svc-b", "vitals", "receive", "s-2"));
  EXPECT_FALSE(core.authorize("svc-b", "vitals", "receive", std::nullopt));
  EXPECT_FALSE(core.authorize("svc-b", "vitals", "send", std::nullopt));

  // Deny is a decision, not an error; a malformed operation is an error.
  EXPECT_EQ(code_of([&] {
              core.authorize("svc-a", "vitals", "publish", std::nullopt);
            }),
            ErrorCode::BadRequest);
}

TEST(Authorize, EveryDecisionIsAuditedAndCounted) {
  TempDir dir;
  SecurityCore core(dir.path);
  core.add_acl_entry(send_entry("svc-a", "vitals"));
  EXPECT_EQ(core.authorize_calls(), 0);
  core.authorize("svc-a", "vitals", "send", std::nullopt);     // allow
  core.authorize("svc-a", "vitals", "receive", "s-1");         // deny
  core.authorize("ghost", "vitals", "send", std::nullopt);     // deny
  EXPECT_EQ(core.authorize_calls(), 3);

  std::ifstream in(dir.path + "/audit.jsonl");
  std::string line;
  std::vector<Json> events;
  while (std::getline(in, line))
    if (!line.empty()) events.push_back(Json::parse(line));
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0]["decision"], "allow");
  EXPECT_EQ(events[1]["decision"], "deny");
  EXPECT_EQ(events[2]["serviceId"], "ghost");
}

// Oracle: the decision must equal a full scan of the entry table applying the
// two matching rules, nothing else.
bool table_scan(const std::vector<AccessControlEntry>& table,
                const std::string& service, const std::string& topic,
                const std::string& operation,
                const std::optional<std::string>& section) {
  for (const auto& entry : table) {
    if (entry.service_id != service || entry.topic != topic ||
        entry.operation != operation)
      continue;
    if (operation == "send") return true;
    if (section && entry.section_id && *entry.section_id == *section)
      return true;
  }
  return false;
}

TEST(Authorize, RandomTablesMatchTableScanOracle) {
  std::mt19937 rng(472881);
  const std::vector<std::string> services{"svc-a", "svc-b", "svc-c", "svc-d"};
  const std::vector<std::string> topics{"vitals", "alerts", "traces"};
  const std::vector<std::string> sections{"s-1", "s-2", "s-3"};

  for (int table_index = 0; table_index < 60; ++table_index) {
    TempDir dir;
    SecurityCore core(dir.path);
    std::vector<AccessControlEntry> table;
    std::uniform_int_distribution<size_t> svc(0, services.size() - 1);
    std::uniform_int_distribution<size_t> top(0, topics.size() - 1);
    std::uniform_int_distribution<size_t> sec(0, sections.size() - 1);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> entries(0, 12);

    int wanted = entries(rng);
    for (int i = 0; i < wanted; ++i) {
      AccessControlEntry entry =
          coin(rng) ? send_entry(services[svc(rng)], topics[top(rng)])
                    : receive_entry(services[svc(rng)], topics[top(rng)],
                                    sections[sec(rng)]);
      if (std::find(table.begin(), table.end(), entry) != table.end())
        continue;
      table.push_back(entry);
      core.add_acl_entry(entry);
    }

    for (int probe = 0; probe < 20; ++probe) {
      const std::string& service = services[svc(rng)];
      const std::string& topic = topics[top(rng)];
      const std::string operation = coin(rng) ? "send" : "receive";
      std::optional<std::string> section;
      if (operation == "receive" || coin(rng)) section = sections[sec(rng)];
      EXPECT_EQ(core.authorize(service, topic, operation, section),
                table_scan(table, service, topic, operation, section))
          << "table " << table_index << " probe " << probe;
    }
  }
}

TEST(KeyManagement, GenerateRotateRevoke) {
  TempDir dir;
  KeyManagementCore keys(dir.path);

  PublicKeyResult first = keys.generate_keypair("vitals", "s-1", false);
  EXPECT_EQ(first.key_id, "k-ceabf70c0aa1");  // sha256("vitals|s-1|1")[:12]
  EXPECT_EQ(first.public_key.size(), crypto::kPublicKeyBytes);

  EXPECT_EQ(code_of([&] { keys.generate_keypair("vitals", "s-1", false); }),
            ErrorCode::ActiveKeyExists);

  PublicKeyResult second = keys.generate_keypair("vitals", "s-1", true);
  EXPECT_EQ(second.key_id, "k-5fec469968a9");  // sha256("vitals|s-1|2")[:12]
  EXPECT_NE(second.public_key, first.public_key);

  auto records = keys.list_records();
  ASSERT_EQ(records.size(), 2u);
  int active = 0, revoked = 0;
  for (const auto& record : records) {
    if (record.status == "active") ++active;
    if (record.status == "revoked") ++revoked;
    EXPECT_EQ(record.suite, crypto::kSuiteId);
  }
  EXPECT_EQ(active, 1);
  EXPECT_EQ(revoked, 1);

  EXPECT_EQ(keys.active_public("vitals", "s-1").key_id, second.key_id);

  EXPECT_EQ(keys.revoke_section("vitals", "s-1"), 2);
  EXPECT_TRUE(keys.list_records().empty());
  EXPECT_EQ(code_of([&] { keys.active_public("vitals", "s-1"); }),
            ErrorCode::NotFound);
  EXPECT_EQ(keys.revoke_section("vitals", "s-1"), 0);
}

TEST(KeyManagement, ActivePairsActuallyMatch) {
  TempDir dir;
  KeyManagementCore keys(dir.path);
  keys.generate_keypair("vitals", "s-1", false);
  keys.generate_keypair("vitals", "s-2", false);

  PublicKeyResult pub = keys.active_public("vitals", "s-1");
  PrivateKeyResult priv = keys.active_private("vitals", "s-1");
  EXPECT_EQ(pub.key_id, priv.key_id);

  crypto::Bytes sealed = crypto::encrypt_payload(pub.public_key, "ping");
  EXPECT_EQ(crypto::decrypt_payload(priv.private_key, sealed), "ping");

  // The neighbouring section's private key must not open it.
  PrivateKeyResult other = keys.active_private("vitals", "s-2");
  EXPECT_EQ(code_of([&] { crypto::decrypt_payload(other.private_key, sealed); }),
            ErrorCode::DecryptFailure);
}

TEST(KeyManagement, RotationContinuesAcrossRestart) {
  TempDir dir;
  std::string first_id;
  {
    KeyManagementCore keys(dir.path);
    first_id = keys.generate_keypair("vitals", "s-1", false).key_id;
  }
  KeyManagementCore keys(dir.path);
  EXPECT_EQ(keys.active_public("vitals", "s-1").key_id, first_id);
  std::string second_id = keys.generate_keypair("vitals", "s-1", true).key_id;
  EXPECT_EQ(second_id, "k-5fec469968a9");  // generation counter kept going
  EXPECT_NE(second_id, first_id);
}

TEST(KeyManagement, KeyStoreIsOwnerOnly) {
  TempDir dir;
  KeyManagementCore keys(dir.path);
  keys.generate_keypair("vitals", "s-1", false);
  struct stat st {};
  ASSERT_EQ(stat((dir.path + "/key_store.jsonl").c_str(), &st), 0);
  EXPECT_EQ(st.st_mode & 0777, 0600u);
}

TEST(KeyManagement, LookupCountersFeedStats) {
  TempDir dir;
  KeyManagementCore keys(dir.path);
  keys.generate_keypair("vitals", "s-1", false);

  keys.active_public("vitals", "s-1");
  keys.active_public("vitals", "s-1");
  keys.active_private("vitals", "s-1");
  EXPECT_EQ(code_of([&] { keys.active_public("vitals", "s-9"); }),
            ErrorCode::NotFound);  // misses count as lookups too

  Json stats = keys.stats();
  EXPECT_EQ(stats["publicLookups"], 3);
  EXPECT_EQ(stats["privateLookups"], 1);
  EXPECT_EQ(stats["lookups"]["vitals/s-1/public"], 2);
  EXPECT_EQ(stats["lookups"]["vitals/s-1/private"], 1);
  EXPECT_EQ(stats["lookups"]["vitals/s-9/public"], 1);
}

TEST(KeyManagement, ValidatesNames) {
  TempDir dir;
  KeyManagementCore keys(dir.path);
  EXPECT_EQ(code_of([&] { keys.generate_keypair("Bad Topic", "s-1", false); }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { keys.generate_keypair("vitals", "bad id", false); }),
            ErrorCode::BadRequest);
}

}  // namespace
}  // namespace dhlink
