#include "dhlink/schema.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "dhlink/errors.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;

Json vitals_schema_doc() {
  return Json::parse(R"({
    "name": "vitals",
    "version": 2,
    "fields": [
      {"name": "patient", "kind": "string"},
      {"name": "hr", "kind": "integer"},
      {"name": "temp", "kind": "float", "required": false},
      {"name": "resting", "kind": "boolean"},
      {"name": "takenAt", "kind": "timestamp"},
      {"name": "loc", "kind": "geo-point", "required": false},
      {"name": "tags", "kind": "array", "required": false,
       "items": {"kind": "string"}},
      {"name": "device", "kind": "record", "required": false,
       "fields": [
         {"name": "model", "kind": "string"},
         {"name": "firmware", "kind": "integer", "required": false}
       ]}
    ]
  })");
}

Json good_instance() {
  return Json::parse(R"({
    "patient": "p-1",
    "hr": 71,
    "temp": 36.7,
    "resting": true,
    "takenAt": 1767600000000,
    "loc": {"lat": 52.52, "lon": 13.405},
    "tags": ["morning", "sensor"],
    "device": {"model": "m1", "firmware": 4}
  })");
}

bool has_violation(const ValidationReport& report, const std::string& path,
                   const std::string& reason) {
  return std::any_of(report.violations.begin(), report.violations.end(),
                     [&](const Violation& v) {
                       return v.path == path && v.reason == reason;
                     });
}

TEST(SchemaParse, RoundTripsThroughJson) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  EXPECT_EQ(schema.name, "vitals");
  EXPECT_EQ(schema.version, 2);
  ASSERT_EQ(schema.fields.size(), 8u);
  EXPECT_EQ(schema.fields[0].name, "patient");
  EXPECT_EQ(schema.fields[2].required, false);
  ASSERT_TRUE(schema.fields[6].items);
  EXPECT_EQ(schema.fields[6].items->kind, FieldKind::String);
  ASSERT_EQ(schema.fields[7].fields.size(), 2u);

  DataSchema again = parse_schema(schema_to_json(schema));
  EXPECT_EQ(schema_to_json(again), schema_to_json(schema));
}

TEST(SchemaParse, RejectsMalformedDefinitions) {
  Json base = vitals_schema_doc();

  Json no_name = base;
  no_name.erase("name");
  EXPECT_EQ(code_of([&] { parse_schema(no_name); }), ErrorCode::BadRequest);

  Json bad_version = base;
  bad_version["version"] = 0;
  EXPECT_EQ(code_of([&] { parse_schema(bad_version); }), ErrorCode::BadRequest);

  Json dup = base;
  dup["fields"].push_back(Json{{"name", "hr"}, {"kind", "integer"}});
  EXPECT_EQ(code_of([&] { parse_schema(dup); }), ErrorCode::BadRequest);

  Json bad_kind = base;
  bad_kind["fields"][0]["kind"] = "varchar";
  EXPECT_EQ(code_of([&] { parse_schema(bad_kind); }), ErrorCode::BadRequest);

  Json stray_items = base;
  stray_items["fields"][0]["items"] = Json{{"kind", "string"}};
  EXPECT_EQ(code_of([&] { parse_schema(stray_items); }),
            ErrorCode::BadRequest);

  Json array_without_items = base;
  array_without_items["fields"][6].erase("items");
  EXPECT_EQ(code_of([&] { parse_schema(array_without_items); }),
            ErrorCode::BadRequest);

  Json named_item = base;
  named_item["fields"][6]["items"] = Json{{"name", "x"}, {"kind", "string"}};
  EXPECT_EQ(code_of([&] { parse_schema(named_item); }), ErrorCode::BadRequest);

  Json stray_key = base;
  stray_key["extra"] = 1;
  EXPECT_EQ(code_of([&] { parse_schema(stray_key); }), ErrorCode::BadRequest);
}

TEST(SchemaValidate, AcceptsConformingInstance) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  ValidationReport report = validate_instance(schema, good_instance());
  EXPECT_TRUE(report.ok);
  EXPECT_TRUE(report.violations.empty());
}

TEST(SchemaValidate, OptionalFieldsMayBeAbsent) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  Json inst = good_instance();
  inst.erase("temp");
  inst.erase("loc");
  inst.erase("tags");
  inst.erase("device");
  EXPECT_TRUE(validate_instance(schema, inst).ok);
}

TEST(SchemaValidate, MissingRequiredIsReportedByPath) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  Json inst = good_instance();
  inst.erase("hr");
  ValidationReport report = validate_instance(schema, inst);
  EXPECT_FALSE(report.ok);
  EXPECT_TRUE(has_violation(report, "hr", "missing-required"));
}

TEST(SchemaValidate, KindMatrix) {
  DataSchema schema = parse_schema(vitals_schema_doc());

  Json inst = good_instance();
  inst["patient"] = 5;
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "patient",
                            "wrong-kind"));

  inst = good_instance();
  inst["hr"] = 71.5;  // integer field rejects a float value
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "hr",
                            "wrong-kind"));

  inst = good_instance();
  inst["temp"] = 36;  // float field accepts an integral number
  EXPECT_TRUE(validate_instance(schema, inst).ok);

  inst = good_instance();
  inst["resting"] = "yes";
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "resting",
                            "wrong-kind"));

  inst = good_instance();
  inst["takenAt"] = "2026-01-05";  // timestamps are integer milliseconds
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "takenAt",
                            "wrong-kind"));

  inst = good_instance();
  inst["tags"] = "not-an-array";
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "tags",
                            "wrong-kind"));

  inst = good_instance();
  inst["tags"] = Json::array({"ok", 7});
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "tags[1]",
                            "wrong-kind"));

  inst = good_instance();
  inst["device"] = Json::array();
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "device",
                            "wrong-kind"));
}

TEST(SchemaValidate, GeoPointRangesAndShape) {
  DataSchema schema = parse_schema(vitals_schema_doc());

  Json inst = good_instance();
  inst["loc"] = Json{{"lat", 90.0001}, {"lon", 13.4}};
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "loc.lat",
                            "out-of-range"));

  inst["loc"] = Json{{"lat", -90.0}, {"lon", 180.0}};
  EXPECT_TRUE(validate_instance(schema, inst).ok);  // boundary is inclusive

  inst["loc"] = Json{{"lat", 0.0}, {"lon", -180.5}};
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "loc.lon",
                            "out-of-range"));

  inst["loc"] = Json{{"lat", 95.0}, {"lon", 200.0}};
  ValidationReport both = validate_instance(schema, inst);
  EXPECT_TRUE(has_violation(both, "loc.lat", "out-of-range"));
  EXPECT_TRUE(has_violation(both, "loc.lon", "out-of-range"));

  inst["loc"] = Json{{"lat", 1.0}};  // missing lon
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "loc",
                            "wrong-kind"));

  inst["loc"] = Json{{"lat", 1.0}, {"lon", 2.0}, {"alt", 3.0}};
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "loc",
                            "wrong-kind"));
}

TEST(SchemaValidate, ClosedWorldRejectsUnknownFields) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  Json inst = good_instance();
  inst["surprise"] = 1;
  ValidationReport report = validate_instance(schema, inst);
  EXPECT_FALSE(report.ok);
  EXPECT_TRUE(has_violation(report, "surprise", "unknown-field"));

  inst = good_instance();
  inst["device"]["serial"] = "s-9";
  EXPECT_TRUE(has_violation(validate_instance(schema, inst), "device.serial",
                            "unknown-field"));
}

TEST(SchemaValidate, NestedPathsCompose) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  Json inst = good_instance();
  inst["device"].erase("model");
  inst["device"]["firmware"] = "four";
  ValidationReport report = validate_instance(schema, inst);
  EXPECT_TRUE(has_violation(report, "device.model", "missing-required"));
  EXPECT_TRUE(has_violation(report, "device.firmware", "wrong-kind"));
}

TEST(SchemaValidate, EveryViolationIsReportedNotJustTheFirst) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  Json inst = Json::object();  // everything required is missing
  ValidationReport report = validate_instance(schema, inst);
  EXPECT_FALSE(report.ok);
  // patient, hr, resting, takenAt are required.
  EXPECT_EQ(report.violations.size(), 4u);
}

TEST(SchemaValidate, NonObjectInstanceIsWrongKindAtRoot) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  ValidationReport report = validate_instance(schema, Json::array());
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].path, "");
  EXPECT_EQ(report.violations[0].reason, "wrong-kind");
}

TEST(SchemaValidate, NeverThrows) {
  DataSchema schema = parse_schema(vitals_schema_doc());
  EXPECT_EQ(code_of([&] { validate_instance(schema, Json()); }), std::nullopt);
  EXPECT_EQ(code_of([&] { validate_instance(schema, 42); }), std::nullopt);
  EXPECT_EQ(code_of([&] { validate_instance(schema, "str"); }), std::nullopt);
}

TEST(SchemaKinds, NamesRoundTrip) {
  for (FieldKind kind :
       {FieldKind::String, FieldKind::Integer, FieldKind::Float,
        FieldKind::Boolean, FieldKind::Timestamp, FieldKind::GeoPoint,
        FieldKind::Array, FieldKind::Record}) {
    Json doc{{"name", "f"}, {"kind", field_kind_name(kind)}};
    if (kind == FieldKind::Array) doc["items"] = Json{{"kind", "string"}};
    if (kind == FieldKind::Record) doc["fields"] = Json::array();
    Json schema_doc{{"name", "one"},
                    {"version", 1},
                    {"fields", Json::array({doc})}};
    DataSchema parsed = parse_schema(schema_doc);
    EXPECT_EQ(parsed.fields[0].kind, kind);
  }
}

}  // namespace
}  // namespace dhlink
