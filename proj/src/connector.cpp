#include "dhlink/connector.hpp"

#include <algorithm>

#include "dhlink/canonical.hpp"
#include "dhlink/crypto.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

std::string payload_string(const crypto::Bytes& bytes) {
  return std::string(bytes.begin(), bytes.end());
}

crypto::Bytes payload_bytes(const std::string& text) {
  return crypto::Bytes(text.begin(), text.end());
}

}  // namespace

ConnectorConfig connector_config_from_json(const Json& doc) {
  if (!doc.is_object())
    fail(ErrorCode::BadRequest, "connector config must be an object");
  ConnectorConfig config;
  for (const char* key : {"serviceId", "apiKey", "topic", "role"}) {
    if (!doc.contains(key) || !doc[key].is_string())
      fail(ErrorCode::BadRequest,
           std::string("connector config needs string ") + key);
  }
  config.service_id = doc["serviceId"].get<std::string>();
  config.api_key = doc["apiKey"].get<std::string>();
  config.topic = doc["topic"].get<std::string>();
  config.role = doc["role"].get<std::string>();
  if (config.role != "source" && config.role != "sink")
    fail(ErrorCode::BadRequest, "role must be source or sink");
  if (doc.contains("sectionId"))
    config.section_id = doc["sectionId"].get<std::string>();
  config.broker_url = doc.value("brokerUrl", "");
  config.security_url = doc.value("securityUrl", "");
  config.plaintext_fallback = doc.value("plaintextFallback", false);
  config.cache_ttl_seconds = doc.value("cacheTtlSeconds", int64_t{300});
  config.poll_interval_ms = doc.value("pollIntervalMs", int64_t{100});
  if (config.cache_ttl_seconds < 1)
    fail(ErrorCode::BadRequest, "cacheTtlSeconds must be >= 1");
  return config;
}

Json connector_config_to_json(const ConnectorConfig& config) {
  Json doc = Json::object();
  doc["serviceId"] = config.service_id;
  doc["apiKey"] = config.api_key;
  doc["topic"] = config.topic;
  doc["role"] = config.role;
  if (config.section_id) doc["sectionId"] = *config.section_id;
  doc["brokerUrl"] = config.broker_url;
  doc["securityUrl"] = config.security_url;
  doc["plaintextFallback"] = config.plaintext_fallback;
  doc["cacheTtlSeconds"] = config.cache_ttl_seconds;
  doc["pollIntervalMs"] = config.poll_interval_ms;
  return doc;
}

SourceConnector::SourceConnector(ConnectorConfig config, DataSchema schema,
                                 BrokerApi* broker, SecurityApi* security,
                                 std::string state_dir, util::Clock clock,
                                 StageObserver observer)
    : config_(std::move(config)),
      schema_(std::move(schema)),
      broker_(broker),
      security_(security),
      state_dir_(std::move(state_dir)),
      clock_(std::move(clock)),
      observer_(std::move(observer)),
      cache_(1024, config_.cache_ttl_seconds) {
  if (!state_dir_.empty()) {
    util::ensure_dir(state_dir_);
    std::string path = state_dir_ + "/" + config_.service_id + "." +
                       config_.topic + ".source.json";
    if (util::file_exists(path)) {
      Json doc = canonical_parse(util::read_file(path));
      send_counter_ = doc.value("sendCounter", int64_t{0});
    }
  }
}

void SourceConnector::emit(const std::string& stage,
                           const std::string& section,
                           const std::string& outcome) {
  if (!observer_) return;
  StageEvent event;
  event.at = clock_();
  event.connector_id = config_.service_id;
  event.stage = stage;
  event.topic = config_.topic;
  event.section = section;
  event.outcome = outcome;
  observer_(event);
}

void SourceConnector::save_state() const {
  if (state_dir_.empty()) return;
  Json doc = Json::object();
  doc["sendCounter"] = send_counter_;
  util::write_file_atomic(state_dir_ + "/" + config_.service_id + "." +
                              config_.topic + ".source.json",
                          canonical_encode(doc) + "\n");
}

std::vector<SendOutcome> SourceConnector::send(const Json& value) {
  Identity identity{config_.service_id, config_.api_key};
  int64_t now = clock_();

  ValidationReport report = validate_instance(schema_, value);
  if (!report.ok) {
    emit("validate", "", "violation");
    fail(ErrorCode::SchemaViolation,
         "value does not match schema " + schema_.name);
  }
  emit("validate", "", "ok");
  std::string plaintext = canonical_encode(value);

  TopicInfo info = broker_->topic_info(Caller::service(identity), config_.topic);
  std::vector<SectionInfo> sections = info.sections;
  std::sort(sections.begin(), sections.end(),
            [](const SectionInfo& a, const SectionInfo& b) {
              return a.section_id < b.section_id;
            });

  int64_t sequence = send_counter_++;
  save_state();
  std::string message_id =
      config_.service_id + "-" + std::to_string(sequence);

  struct Pending {
    SendOutcome outcome;
    std::optional<Envelope> envelope;
  };
  std::vector<Pending> pending;

  for (const auto& section : sections) {
    Pending entry;
    entry.outcome.section_id = section.section_id;
    std::optional<KeyCache::CachedKey> key =
        cache_.get(config_.topic, section.section_id, KeyKind::Public, now);
    emit("cache-probe", section.section_id, key ? "hit" : "miss");
    if (!key) {
      try {
        PublicKeyResult fetched = security_->get_public_key(
            identity, config_.topic, section.section_id);
        cache_.put(config_.topic, section.section_id, KeyKind::Public,
                   fetched.key_id, fetched.public_key, now);
        key = KeyCache::CachedKey{fetched.key_id, fetched.public_key};
        emit("key-fetch", section.section_id, "found");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound && e.code() != ErrorCode::Deny)
          throw;
        emit("key-fetch", section.section_id, "not-found");
      }
    }

    Envelope envelope;
    envelope.topic = config_.topic;
    envelope.section = section.section_id;
    envelope.schema = schema_.name;
    envelope.schema_version = schema_.version;
    envelope.sender = config_.service_id;
    envelope.message_id = message_id;
    envelope.sent_at = now;
    if (key) {
      crypto::Bytes ciphertext = crypto::encrypt_payload(key->key, plaintext);
      envelope.encrypted = true;
      envelope.key_id = key->key_id;
      envelope.payload = payload_string(ciphertext);
      entry.outcome.encrypted = true;
      entry.envelope = std::move(envelope);
      emit("encrypt", section.section_id, "ok");
    } else if (config_.plaintext_fallback) {
      envelope.encrypted = false;
      envelope.payload = plaintext;
      entry.outcome.encrypted = false;
      entry.envelope = std::move(envelope);
      emit("plaintext-fallback", section.section_id, "ok");
    } else {
      entry.outcome.outcome = "key-unavailable";
      emit("key-unavailable", section.section_id, "skipped");
    }
    pending.push_back(std::move(entry));
  }

  bool allowed =
      security_->authorize(identity, config_.topic, "send", std::nullopt);
  emit("authorize-send", "", allowed ? "allow" : "deny");
  if (!allowed) {
    emit("reject", "", "unauthorized");
    fail(ErrorCode::Unauthorized,
         config_.service_id + " may not send on " + config_.topic);
  }

  std::vector<SendOutcome> outcomes;
  for (auto& entry : pending) {
    if (entry.envelope) {
      int64_t offset = broker_->append(identity, config_.topic,
                                       entry.outcome.section_id,
                                       *entry.envelope);
      entry.outcome.outcome = "appended";
      entry.outcome.offset = offset;
      emit("append", entry.outcome.section_id, std::to_string(offset));
    }
    outcomes.push_back(entry.outcome);
  }
  return outcomes;
}

SinkConnector::SinkConnector(ConnectorConfig config, DataSchema schema,
                             BrokerApi* broker, SecurityApi* security,
                             std::string state_dir, util::Clock clock,
                             StageObserver observer)
    : config_(std::move(config)),
      schema_(std::move(schema)),
      broker_(broker),
      security_(security),
      state_dir_(std::move(state_dir)),
      clock_(std::move(clock)),
      observer_(std::move(observer)),
      cache_(1024, config_.cache_ttl_seconds) {
  Identity identity{config_.service_id, config_.api_key};
  if (config_.section_id) {
    section_id_ = *config_.section_id;
  } else {
    TopicInfo info =
        broker_->topic_info(Caller::service(identity), config_.topic);
    for (const auto& section : info.sections)
      if (section.receiver_id == config_.service_id)
        section_id_ = section.section_id;
    if (section_id_.empty())
      section_id_ = broker_->allocate_section(Caller::service(identity),
                                              config_.topic,
                                              config_.service_id);
  }
  load_state();
}

void SinkConnector::emit(const std::string& stage, const std::string& outcome) {
  if (!observer_) return;
  StageEvent event;
  event.at = clock_();
  event.connector_id = config_.service_id;
  event.stage = stage;
  event.topic = config_.topic;
  event.section = section_id_;
  event.outcome = outcome;
  observer_(event);
}

namespace {

std::string sink_state_path(const std::string& dir, const ConnectorConfig& c,
                            const std::string& section_id) {
  return dir + "/" + c.service_id + "." + c.topic + "." + section_id +
         ".sink.json";
}

}  // namespace

void SinkConnector::load_state() {
  if (state_dir_.empty()) return;
  util::ensure_dir(state_dir_);
  std::string path = sink_state_path(state_dir_, config_, section_id_);
  if (!util::file_exists(path)) return;
  Json doc = canonical_parse(util::read_file(path));
  cursor_ = doc.value("cursor", int64_t{0});
  if (doc.contains("seen"))
    for (const auto& id : doc["seen"]) {
      std::string text = id.get<std::string>();
      if (seen_ids_.insert(text).second) seen_order_.push_back(text);
    }
}

void SinkConnector::save_state() const {
  if (state_dir_.empty()) return;
  Json doc = Json::object();
  doc["cursor"] = cursor_;
  Json seen = Json::array();
  for (const auto& id : seen_order_) seen.push_back(id);
  doc["seen"] = seen;
  util::write_file_atomic(sink_state_path(state_dir_, config_, section_id_),
                          canonical_encode(doc) + "\n");
}

std::optional<KeyCache::CachedKey> SinkConnector::private_key_for(
    const std::string& key_id) {
  Identity identity{config_.service_id, config_.api_key};
  int64_t now = clock_();
  std::optional<KeyCache::CachedKey> key =
      cache_.get(config_.topic, section_id_, KeyKind::Private, now);
  emit("cache-probe", key ? "hit" : "miss");
  bool from_cache = key.has_value();
  if (key && key->key_id == key_id) return key;
  if (from_cache) cache_.invalidate(config_.topic, section_id_);
  try {
    PrivateKeyResult fetched =
        security_->get_private_key(identity, config_.topic, section_id_);
    cache_.put(config_.topic, section_id_, KeyKind::Private, fetched.key_id,
               fetched.private_key, now);
    emit("key-fetch", "found");
    if (fetched.key_id == key_id)
      return KeyCache::CachedKey{fetched.key_id, fetched.private_key};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFound && e.code() != ErrorCode::Deny) throw;
    emit("key-fetch", "not-found");
  }
  return std::nullopt;
}

PollResult SinkConnector::poll(int64_t max_count) {
  Identity identity{config_.service_id, config_.api_key};
  PollResult result;

  bool allowed =
      security_->authorize(identity, config_.topic, "receive", section_id_);
  emit("authorize-receive", allowed ? "allow" : "deny");
  if (!allowed)
    fail(ErrorCode::Unauthorized,
         config_.service_id + " may not receive on " + config_.topic + "/" +
             section_id_);

  std::vector<RoutedRecord> records =
      broker_->fetch(identity, config_.topic, section_id_, cursor_, max_count);
  emit("fetch", std::to_string(records.size()));

  for (const auto& record : records) {
    const Envelope& envelope = record.envelope;
    std::string plaintext;
    if (envelope.encrypted) {
      std::optional<KeyCache::CachedKey> key = private_key_for(*envelope.key_id);
      if (!key) {
        emit("generate-error", "key-unavailable");
        result.halted = true;
        result.halt_offset = record.offset;
        result.halt_reason = "key-unavailable";
        cursor_ = record.offset;
        break;
      }
      try {
        plaintext =
            crypto::decrypt_payload(key->key, payload_bytes(envelope.payload));
        emit("decrypt", "ok");
      } catch (const Error&) {
        emit("decrypt", "decrypt-failure");
        result.skipped.push_back({record.offset, "decrypt-failure"});
        cursor_ = record.offset + 1;
        continue;
      }
    } else {
      plaintext = envelope.payload;
    }

    Json value;
    try {
      value = canonical_parse(plaintext);
      emit("decode", "ok");
    } catch (const Error&) {
      emit("decode", "malformed-payload");
      result.skipped.push_back({record.offset, "malformed-payload"});
      cursor_ = record.offset + 1;
      continue;
    }

    ValidationReport report = validate_instance(schema_, value);
    emit("validate", report.ok ? "ok" : "violation");
    if (!report.ok) {
      result.skipped.push_back({record.offset, "schema-violation"});
      cursor_ = record.offset + 1;
      continue;
    }

    if (seen_ids_.count(envelope.message_id)) {
      result.skipped.push_back({record.offset, "duplicate"});
      cursor_ = record.offset + 1;
      continue;
    }
    seen_ids_.insert(envelope.message_id);
    seen_order_.push_back(envelope.message_id);
    while (seen_order_.size() > 4096) {
      seen_ids_.erase(seen_order_.front());
      seen_order_.pop_front();
    }

    ReceivedRecord received;
    received.offset = record.offset;
    received.value = std::move(value);
    received.envelope = envelope;
    result.records.push_back(std::move(received));
    cursor_ = record.offset + 1;
  }

  save_state();
  return result;
}

DataSchema load_connector_schema(BrokerApi& broker, DiscoveryApi& discovery,
                                 const Caller& caller,
                                 const std::string& topic) {
  TopicInfo info = broker.topic_info(caller, topic);
  std::optional<Json> doc =
      discovery.get_schema(caller, info.schema_name, info.schema_version);
  if (!doc)
    fail(ErrorCode::UnknownSchema,
         "schema not registered: " + info.schema_name);
  return parse_schema(*doc);
}

PollResult read_records(const ConnectorConfig& config, const DataSchema& schema,
                        BrokerApi& broker, SecurityApi& security,
                        int64_t from_offset, int64_t max_count,
                        util::Clock clock) {
  SinkConnector sink(config, schema, &broker, &security, "", std::move(clock));
  sink.set_cursor(from_offset);
  return sink.poll(max_count);
}

}  // namespace dhlink
