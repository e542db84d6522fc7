#include "dhlink/schema.hpp"

#include <cmath>
#include <set>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

namespace {

constexpr const char* kMissingRequired = "missing-required";
constexpr const char* kWrongKind = "wrong-kind";
constexpr const char* kOutOfRange = "out-of-range";
constexpr const char* kUnknownField = "unknown-field";

struct KindName {
  FieldKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {FieldKind::String, "string"},       {FieldKind::Integer, "integer"},
    {FieldKind::Float, "float"},         {FieldKind::Boolean, "boolean"},
    {FieldKind::Timestamp, "timestamp"}, {FieldKind::GeoPoint, "geo-point"},
    {FieldKind::Array, "array"},         {FieldKind::Record, "record"},
};

FieldKind kind_from_name(const std::string& name) {
  for (const auto& entry : kKindNames)
    if (name == entry.name) return entry.kind;
  fail(ErrorCode::BadRequest, "unknown field kind: " + name);
}

FieldSpec parse_field(const Json& doc, bool is_item);

std::vector<FieldSpec> parse_field_list(const Json& doc) {
  if (!doc.is_array()) fail(ErrorCode::BadRequest, "fields must be an array");
  std::vector<FieldSpec> out;
  std::set<std::string> names;
  for (const auto& entry : doc) {
    FieldSpec field = parse_field(entry, false);
    if (!names.insert(field.name).second)
      fail(ErrorCode::BadRequest, "duplicate field name: " + field.name);
    out.push_back(std::move(field));
  }
  return out;
}

FieldSpec parse_field(const Json& doc, bool is_item) {
  if (!doc.is_object()) fail(ErrorCode::BadRequest, "field spec must be an object");
  FieldSpec field;
  if (is_item) {
    if (doc.contains("name") || doc.contains("required"))
      fail(ErrorCode::BadRequest, "array item spec carries no name or required flag");
  } else {
    if (!doc.contains("name") || !doc["name"].is_string())
      fail(ErrorCode::BadRequest, "field spec needs a string name");
    field.name = doc["name"].get<std::string>();
    if (!util::is_valid_identifier(field.name))
      fail(ErrorCode::BadRequest, "invalid field name: " + field.name);
    if (doc.contains("required")) {
      if (!doc["required"].is_boolean())
        fail(ErrorCode::BadRequest, "required must be boolean");
      field.required = doc["required"].get<bool>();
    }
  }
  if (!doc.contains("kind") || !doc["kind"].is_string())
    fail(ErrorCode::BadRequest, "field spec needs a string kind");
  field.kind = kind_from_name(doc["kind"].get<std::string>());

  if (field.kind == FieldKind::Array) {
    if (!doc.contains("items"))
      fail(ErrorCode::BadRequest, "array field needs an items spec");
    field.items = std::make_shared<FieldSpec>(parse_field(doc["items"], true));
  } else if (doc.contains("items")) {
    fail(ErrorCode::BadRequest, "items only applies to array fields");
  }

  if (field.kind == FieldKind::Record) {
    if (!doc.contains("fields"))
      fail(ErrorCode::BadRequest, "record field needs a fields list");
    field.fields = parse_field_list(doc["fields"]);
  } else if (doc.contains("fields")) {
    fail(ErrorCode::BadRequest, "fields only applies to record fields");
  }
  return field;
}

Json field_to_json(const FieldSpec& field, bool is_item) {
  Json doc = Json::object();
  if (!is_item) {
    doc["name"] = field.name;
    doc["required"] = field.required;
  }
  doc["kind"] = field_kind_name(field.kind);
  if (field.kind == FieldKind::Array && field.items)
    doc["items"] = field_to_json(*field.items, true);
  if (field.kind == FieldKind::Record) {
    Json fields = Json::array();
    for (const auto& sub : field.fields) fields.push_back(field_to_json(sub, false));
    doc["fields"] = fields;
  }
  return doc;
}

bool is_integral_number(const Json& value) {
  return value.is_number_integer() || value.is_number_unsigned();
}

void check_value(const FieldSpec& spec, const Json& value,
                 const std::string& path, std::vector<Violation>& out) {
  switch (spec.kind) {
    case FieldKind::String:
      if (!value.is_string()) out.push_back({path, kWrongKind});
      return;
    case FieldKind::Integer:
    case FieldKind::Timestamp:
      if (!is_integral_number(value)) out.push_back({path, kWrongKind});
      return;
    case FieldKind::Float:
      if (!value.is_number() || (value.is_number_float() &&
                                 !std::isfinite(value.get<double>())))
        out.push_back({path, kWrongKind});
      return;
    case FieldKind::Boolean:
      if (!value.is_boolean()) out.push_back({path, kWrongKind});
      return;
    case FieldKind::GeoPoint: {
      if (!value.is_object() || value.size() != 2 || !value.contains("lat") ||
          !value.contains("lon") || !value["lat"].is_number() ||
          !value["lon"].is_number()) {
        out.push_back({path, kWrongKind});
        return;
      }
      double lat = value["lat"].get<double>();
      double lon = value["lon"].get<double>();
      if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0)
        out.push_back({path + ".lat", kOutOfRange});
      if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0)
        out.push_back({path + ".lon", kOutOfRange});
      return;
    }
    case FieldKind::Array: {
      if (!value.is_array()) {
        out.push_back({path, kWrongKind});
        return;
      }
      for (size_t i = 0; i < value.size(); ++i)
        check_value(*spec.items, value[i],
                    path + "[" + std::to_string(i) + "]", out);
      return;
    }
    case FieldKind::Record: {
      if (!value.is_object()) {
        out.push_back({path, kWrongKind});
        return;
      }
      std::string prefix = path.empty() ? "" : path + ".";
      for (const auto& sub : spec.fields) {
        if (!value.contains(sub.name)) {
          if (sub.required) out.push_back({prefix + sub.name, kMissingRequired});
          continue;
        }
        check_value(sub, value[sub.name], prefix + sub.name, out);
      }
      for (const auto& [key, child] : value.items()) {
        (void)child;
        bool known = false;
        for (const auto& sub : spec.fields)
          if (sub.name == key) { known = true; break; }
        if (!known) out.push_back({prefix + key, kUnknownField});
      }
      return;
    }
  }
}

}  // namespace

const char* field_kind_name(FieldKind kind) {
  for (const auto& entry : kKindNames)
    if (kind == entry.kind) return entry.name;
  return "string";
}

DataSchema parse_schema(const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::BadRequest, "schema must be an object");
  DataSchema schema;
  if (!doc.contains("name") || !doc["name"].is_string())
    fail(ErrorCode::BadRequest, "schema needs a string name");
  schema.name = doc["name"].get<std::string>();
  if (!util::is_valid_identifier(schema.name))
    fail(ErrorCode::BadRequest, "invalid schema name: " + schema.name);
  if (!doc.contains("version") || !is_integral_number(doc["version"]))
    fail(ErrorCode::BadRequest, "schema needs an integer version");
  schema.version = doc["version"].get<int>();
  if (schema.version < 1) fail(ErrorCode::BadRequest, "schema version must be >= 1");
  if (!doc.contains("fields"))
    fail(ErrorCode::BadRequest, "schema needs a fields list");
  schema.fields = parse_field_list(doc["fields"]);
  for (const auto& [key, child] : doc.items()) {
    (void)child;
    if (key != "name" && key != "version" && key != "fields" &&
        key != "description")
      fail(ErrorCode::BadRequest, "unexpected schema key: " + key);
  }
  return schema;
}

Json schema_to_json(const DataSchema& schema) {
  Json doc = Json::object();
  doc["name"] = schema.name;
  doc["version"] = schema.version;
  Json fields = Json::array();
  for (const auto& field : schema.fields)
    fields.push_back(field_to_json(field, false));
  doc["fields"] = fields;
  return doc;
}

ValidationReport validate_instance(const DataSchema& schema, const Json& value) {
  FieldSpec root;
  root.kind = FieldKind::Record;
  root.fields = schema.fields;
  ValidationReport report;
  check_value(root, value, "", report.violations);
  report.ok = report.violations.empty();
  return report;
}

}  // namespace dhlink
