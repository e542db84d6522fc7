#include "dhlink/envelope.hpp"

#include "dhlink/canonical.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

namespace {

[[noreturn]] void malformed(const std::string& why) {
  fail(ErrorCode::MalformedEnvelope, why);
}

const Json& require(const Json& doc, const char* key, Json::value_t type) {
  if (!doc.contains(key)) malformed(std::string("missing field: ") + key);
  const Json& value = doc[key];
  bool ok = value.type() == type;
  if (type == Json::value_t::number_integer)
    ok = value.is_number_integer() || value.is_number_unsigned();
  if (!ok) malformed(std::string("wrong type for field: ") + key);
  return value;
}

}  // namespace

void check_envelope(const Envelope& envelope) {
  if (!util::is_valid_topic_name(envelope.topic))
    malformed("invalid topic name");
  if (!util::is_valid_identifier(envelope.section))
    malformed("invalid section id");
  if (!util::is_valid_identifier(envelope.schema))
    malformed("invalid schema name");
  if (envelope.schema_version < 1) malformed("schemaVersion must be >= 1");
  if (!util::is_valid_identifier(envelope.sender))
    malformed("invalid sender id");
  if (envelope.message_id.empty() || envelope.message_id.size() > 256)
    malformed("messageId must be 1..256 characters");
  if (envelope.sent_at < 0) malformed("sentAt must be non-negative");
  if (envelope.encrypted != envelope.key_id.has_value())
    malformed("keyId present iff encrypted");
  if (envelope.key_id && !util::is_valid_identifier(*envelope.key_id))
    malformed("invalid key id");
  if (envelope.payload.empty()) malformed("payload must be non-empty");
}

Json envelope_to_json(const Envelope& envelope) {
  check_envelope(envelope);
  Json doc = Json::object();
  doc["topic"] = envelope.topic;
  doc["section"] = envelope.section;
  doc["schema"] = envelope.schema;
  doc["schemaVersion"] = envelope.schema_version;
  doc["sender"] = envelope.sender;
  doc["messageId"] = envelope.message_id;
  doc["sentAt"] = envelope.sent_at;
  doc["encrypted"] = envelope.encrypted;
  if (envelope.key_id) doc["keyId"] = *envelope.key_id;
  doc["payload"] = util::base64url_encode(envelope.payload);
  return doc;
}

Envelope envelope_from_json(const Json& doc) {
  if (!doc.is_object()) malformed("envelope must be a JSON object");
  Envelope envelope;
  envelope.topic = require(doc, "topic", Json::value_t::string).get<std::string>();
  envelope.section =
      require(doc, "section", Json::value_t::string).get<std::string>();
  envelope.schema =
      require(doc, "schema", Json::value_t::string).get<std::string>();
  envelope.schema_version =
      require(doc, "schemaVersion", Json::value_t::number_integer).get<int>();
  envelope.sender =
      require(doc, "sender", Json::value_t::string).get<std::string>();
  envelope.message_id =
      require(doc, "messageId", Json::value_t::string).get<std::string>();
  envelope.sent_at =
      require(doc, "sentAt", Json::value_t::number_integer).get<int64_t>();
  envelope.encrypted =
      require(doc, "encrypted", Json::value_t::boolean).get<bool>();
  if (doc.contains("keyId"))
    envelope.key_id =
        require(doc, "keyId", Json::value_t::string).get<std::string>();
  std::string payload_text =
      require(doc, "payload", Json::value_t::string).get<std::string>();
  try {
    envelope.payload = util::base64url_decode(payload_text);
  } catch (const Error&) {
    malformed("payload is not valid base64url");
  }
  for (const auto& [key, child] : doc.items()) {
    (void)child;
    static constexpr const char* kKeys[] = {
        "topic",  "section",   "schema", "schemaVersion", "sender",
        "messageId", "sentAt", "encrypted", "keyId",      "payload"};
    bool known = false;
    for (const char* k : kKeys)
      if (key == k) { known = true; break; }
    if (!known) malformed("unexpected field: " + key);
  }
  check_envelope(envelope);
  return envelope;
}

std::string encode_envelope(const Envelope& envelope) {
  return canonical_encode(envelope_to_json(envelope));
}

Envelope parse_envelope(const std::string& bytes) {
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded()) malformed("envelope is not valid JSON");
  return envelope_from_json(doc);
}

}  // namespace dhlink
