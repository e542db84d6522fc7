#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dhlink/apis.hpp"
#include "dhlink/keycache.hpp"
#include "dhlink/schema.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

// Connector configuration block, as found in config files.
struct ConnectorConfig {
  std::string service_id;
  std::string api_key;
  std::string topic;
  std::string role;  // source | sink
  std::optional<std::string> section_id;  // sink; resolved when absent
  std::string broker_url;
  std::string security_url;
  bool plaintext_fallback = false;
  int64_t cache_ttl_seconds = 300;
  int64_t poll_interval_ms = 100;
};

ConnectorConfig connector_config_from_json(const Json& doc);
Json connector_config_to_json(const ConnectorConfig& config);

// Pipeline stage instrumentation. Stages appear in execution order, so a
// transcript of events is a faithful trace of the decision tree.
struct StageEvent {
  int64_t at = 0;
  std::string connector_id;
  std::string stage;    // validate, cache-probe, key-fetch, encrypt,
                        // plaintext-fallback, authorize-send, append, reject,
                        // authorize-receive, fetch, decrypt, decode, generate-error
  std::string topic;
  std::string section;
  std::string outcome;  // stage-specific: ok, hit, miss, found, not-found,
                        // allow, deny, skipped, ...
};

using StageObserver = std::function<void(const StageEvent&)>;

struct SendOutcome {
  std::string section_id;
  std::string outcome;  // appended | key-unavailable
  bool encrypted = false;
  int64_t offset = -1;  // valid when appended
};

struct ReceivedRecord {
  int64_t offset = 0;
  Json value;
  Envelope envelope;
};

struct SkipReport {
  int64_t offset = 0;
  std::string reason;  // decrypt-failure | schema-violation | malformed-payload
                       // | duplicate
};

struct PollResult {
  std::vector<ReceivedRecord> records;
  std::vector<SkipReport> skipped;
  // Set when an encrypted record's private key cannot be produced: the
  // cursor stays before that record and polling stops there.
  bool halted = false;
  int64_t halt_offset = -1;
  std::string halt_reason;
};

// Sending pipeline: validate the value once, build one envelope per section
// of the topic in sectionId order (key cache -> key service -> encrypt, or
// the plaintext fallback, or a key-unavailable skip), then a single
// authorization check gates all appends.
class SourceConnector {
 public:
  SourceConnector(ConnectorConfig config, DataSchema schema, BrokerApi* broker,
                  SecurityApi* security, std::string state_dir = "",
                  util::Clock clock = util::system_clock(),
                  StageObserver observer = nullptr);

  std::vector<SendOutcome> send(const Json& value);

  int64_t send_counter() const { return send_counter_; }
  const ConnectorConfig& config() const { return config_; }
  KeyCache& key_cache() { return cache_; }

 private:
  void emit(const std::string& stage, const std::string& section,
            const std::string& outcome);
  void save_state() const;

  ConnectorConfig config_;
  DataSchema schema_;
  BrokerApi* broker_;
  SecurityApi* security_;
  std::string state_dir_;
  util::Clock clock_;
  StageObserver observer_;
  KeyCache cache_;
  int64_t send_counter_ = 0;
};

// Receiving pipeline: authorization gates the fetch; each record is
// decrypted (cache -> key service), decoded, validated, and de-duplicated by
// messageId. The cursor and de-dup window survive restarts via a state file.
class SinkConnector {
 public:
  SinkConnector(ConnectorConfig config, DataSchema schema, BrokerApi* broker,
                SecurityApi* security, std::string state_dir = "",
                util::Clock clock = util::system_clock(),
                StageObserver observer = nullptr);

  PollResult poll(int64_t max_count = 100);

  const std::string& section_id() const { return section_id_; }
  int64_t cursor() const { return cursor_; }
  // Replay support for stateless read clients; normal polling never rewinds.
  void set_cursor(int64_t offset) { cursor_ = offset; }
  const ConnectorConfig& config() const { return config_; }
  KeyCache& key_cache() { return cache_; }

 private:
  void emit(const std::string& stage, const std::string& outcome);
  void save_state() const;
  void load_state();
  // Produces the private key for a concrete keyId, or nullopt.
  std::optional<KeyCache::CachedKey> private_key_for(const std::string& key_id);

  ConnectorConfig config_;
  DataSchema schema_;
  BrokerApi* broker_;
  SecurityApi* security_;
  std::string state_dir_;
  util::Clock clock_;
  StageObserver observer_;
  KeyCache cache_;
  std::string section_id_;
  int64_t cursor_ = 0;
  std::deque<std::string> seen_order_;
  std::set<std::string> seen_ids_;
};

// Resolves the schema a connector must use from the topic's registered
// schema reference.
DataSchema load_connector_schema(BrokerApi& broker, DiscoveryApi& discovery,
                                 const Caller& caller,
                                 const std::string& topic);

// RESTful-API-only consumers: one-shot authorized read with decrypt and
// validation, no cursor state.
PollResult read_records(const ConnectorConfig& config, const DataSchema& schema,
                        BrokerApi& broker, SecurityApi& security,
                        int64_t from_offset, int64_t max_count,
                        util::Clock clock = util::system_clock());

}  // namespace dhlink
