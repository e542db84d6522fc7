#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

// A small FHIR-flavored record language. A schema names an ordered list of
// typed fields; records and arrays nest.
enum class FieldKind {
  String,
  Integer,
  Float,
  Boolean,
  Timestamp,  // integer milliseconds since the Unix epoch, UTC
  GeoPoint,   // {"lat": [-90, 90], "lon": [-180, 180]}
  Array,      // homogeneous; element kind in `items`
  Record,     // nested field list in `fields`
};

const char* field_kind_name(FieldKind kind);

struct FieldSpec {
  std::string name;  // empty only for array element specs
  FieldKind kind = FieldKind::String;
  bool required = true;
  std::vector<FieldSpec> fields;     // Record only
  std::shared_ptr<FieldSpec> items;  // Array only
};

struct DataSchema {
  std::string name;
  int version = 1;
  std::vector<FieldSpec> fields;
};

struct Violation {
  std::string path;
  std::string reason;  // missing-required | wrong-kind | out-of-range | unknown-field
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

// Document form: {"name": str, "version": int, "fields": [FieldSpec...]},
// each field {"name": str, "kind": str, "required": bool, "items"?: {...},
// "fields"?: [...]}. Raises BadRequest when the document breaks schema
// well-formedness (duplicate names, bad kind, version < 1).
DataSchema parse_schema(const Json& doc);
Json schema_to_json(const DataSchema& schema);

// Reports every violation; never throws for any JSON value.
ValidationReport validate_instance(const DataSchema& schema, const Json& value);

}  // namespace dhlink
