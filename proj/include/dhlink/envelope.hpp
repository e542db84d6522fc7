#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dhlink/json.hpp"

namespace dhlink {

// The unit of exchange between connectors and the broker. The payload is an
// opaque byte string: canonical plaintext when encrypted is false, the hybrid
// ciphertext when true. On the wire the payload travels base64url-encoded.
struct Envelope {
  std::string topic;
  std::string section;
  std::string schema;
  int schema_version = 1;
  std::string sender;
  std::string message_id;
  int64_t sent_at = 0;
  bool encrypted = false;
  std::optional<std::string> key_id;  // present iff encrypted
  std::string payload;                // raw bytes, never empty

  bool operator==(const Envelope&) const = default;
};

// Raises MalformedEnvelope when an invariant is broken (empty payload,
// encrypted/keyId mismatch, bad identifiers).
void check_envelope(const Envelope& envelope);

Json envelope_to_json(const Envelope& envelope);
Envelope envelope_from_json(const Json& doc);

// Wire bytes: the canonical encoding of the JSON object form.
std::string encode_envelope(const Envelope& envelope);
Envelope parse_envelope(const std::string& bytes);

}  // namespace dhlink
