#include "dhlink/envelope.hpp"

#include <gtest/gtest.h>

#include <string>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;

Envelope sample(bool encrypted = false) {
  Envelope e;
  e.topic = "vitals-stream";
  e.section = "s-0123456789ab";
  e.schema = "vitals";
  e.schema_version = 2;
  e.sender = "monitor-svc";
  e.message_id = "m-0001";
  e.sent_at = 1767600000000;
  e.encrypted = encrypted;
  if (encrypted) e.key_id = "k-abc123";
  e.payload = encrypted ? std::string("\x00\x01\xfe\xff raw bytes", 14)
                        : std::string("{\"hr\":71}");
  return e;
}

TEST(EnvelopeCheck, AcceptsWellFormed) {
  EXPECT_EQ(code_of([] { check_envelope(sample(false)); }), std::nullopt);
  EXPECT_EQ(code_of([] { check_envelope(sample(true)); }), std::nullopt);
}

TEST(EnvelopeCheck, KeyIdPresentIffEncrypted) {
  Envelope e = sample(false);
  e.key_id = "k-abc123";  // plaintext message must not carry a key id
  EXPECT_EQ(code_of([&] { check_envelope(e); }),
            ErrorCode::MalformedEnvelope);

  Envelope f = sample(true);
  f.key_id.reset();  // encrypted message must name its key
  EXPECT_EQ(code_of([&] { check_envelope(f); }),
            ErrorCode::MalformedEnvelope);
}

TEST(EnvelopeCheck, RejectsBrokenFields) {
  auto expect_malformed = [](auto mutate) {
    Envelope e = sample(false);
    mutate(e);
    EXPECT_EQ(code_of([&] { check_envelope(e); }),
              ErrorCode::MalformedEnvelope);
  };
  expect_malformed([](Envelope& e) { e.topic = "Bad Topic"; });
  expect_malformed([](Envelope& e) { e.section = ""; });
  expect_malformed([](Envelope& e) { e.schema = "no.dots"; });
  expect_malformed([](Envelope& e) { e.schema_version = 0; });
  expect_malformed([](Envelope& e) { e.sender = ""; });
  expect_malformed([](Envelope& e) { e.message_id = ""; });
  expect_malformed([](Envelope& e) { e.message_id = std::string(257, 'm'); });
  expect_malformed([](Envelope& e) { e.sent_at = -1; });
  expect_malformed([](Envelope& e) { e.payload = ""; });
}

TEST(EnvelopeJson, RoundTripsPlaintextAndBinaryPayloads) {
  for (bool encrypted : {false, true}) {
    Envelope e = sample(encrypted);
    Envelope back = envelope_from_json(envelope_to_json(e));
    EXPECT_EQ(back, e);
  }
}

TEST(EnvelopeJson, PayloadTravelsBase64Url) {
  Envelope e = sample(true);
  Json doc = envelope_to_json(e);
  const std::string wire = doc["payload"].get<std::string>();
  EXPECT_EQ(wire.find('='), std::string::npos);
  EXPECT_EQ(util::base64url_decode(wire), e.payload);
}

TEST(EnvelopeJson, KeyIdFieldMirrorsEncryptedFlag) {
  EXPECT_FALSE(envelope_to_json(sample(false)).contains("keyId"));
  EXPECT_TRUE(envelope_to_json(sample(true)).contains("keyId"));
}

TEST(EnvelopeJson, RejectsMissingWrongTypedAndUnknownFields) {
  Json good = envelope_to_json(sample(true));

  for (const char* key : {"topic", "section", "schema", "schemaVersion",
                          "sender", "messageId", "sentAt", "encrypted",
                          "payload"}) {
    Json doc = good;
    doc.erase(key);
    EXPECT_EQ(code_of([&] { envelope_from_json(doc); }),
              ErrorCode::MalformedEnvelope)
        << "missing " << key;
  }

  Json wrong = good;
  wrong["schemaVersion"] = "2";
  EXPECT_EQ(code_of([&] { envelope_from_json(wrong); }),
            ErrorCode::MalformedEnvelope);

  wrong = good;
  wrong["encrypted"] = "yes";
  EXPECT_EQ(code_of([&] { envelope_from_json(wrong); }),
            ErrorCode::MalformedEnvelope);

  Json extra = good;
  extra["routingHint"] = "x";
  EXPECT_EQ(code_of([&] { envelope_from_json(extra); }),
            ErrorCode::MalformedEnvelope);

  Json bad_payload = good;
  bad_payload["payload"] = "not base64url!";
  EXPECT_EQ(code_of([&] { envelope_from_json(bad_payload); }),
            ErrorCode::MalformedEnvelope);
}

TEST(EnvelopeWire, EncodeIsCanonicalAndParses) {
  Envelope e = sample(true);
  const std::string bytes = encode_envelope(e);
  // Canonical form: first key in code-unit order is "encrypted".
  EXPECT_EQ(bytes.rfind("{\"encrypted\":", 0), 0u);
  EXPECT_EQ(parse_envelope(bytes), e);
  // Stable across envelope copies.
  EXPECT_EQ(encode_envelope(parse_envelope(bytes)), bytes);
}

TEST(EnvelopeWire, ParseRejectsNonJson) {
  EXPECT_EQ(code_of([] { parse_envelope("n/a"); }),
            ErrorCode::MalformedEnvelope);
  EXPECT_EQ(code_of([] { parse_envelope("[]"); }),
            ErrorCode::MalformedEnvelope);
}

}  // namespace
}  // namespace dhlink
