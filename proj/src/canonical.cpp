#include "dhlink/canonical.hpp"

#include <cmath>

#include "dhlink/crypto.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

void check_encodable(const Json& value, int depth) {
  if (depth > 256) fail(ErrorCode::NonEncodable, "nesting too deep");
  switch (value.type()) {
    case Json::value_t::null:
      fail(ErrorCode::NonEncodable, "null is not encodable");
    case Json::value_t::binary:
      fail(ErrorCode::NonEncodable, "binary values are not encodable");
    case Json::value_t::discarded:
      fail(ErrorCode::NonEncodable, "discarded value");
    case Json::value_t::number_float: {
      double d = value.get<double>();
      if (!std::isfinite(d))
        fail(ErrorCode::NonEncodable, "non-finite number");
      return;
    }
    case Json::value_t::object:
      for (const auto& [key, child] : value.items()) {
        (void)key;
        check_encodable(child, depth + 1);
      }
      return;
    case Json::value_t::array:
      for (const auto& child : value) check_encodable(child, depth + 1);
      return;
    default:
      return;
  }
}

}  // namespace

std::string canonical_encode(const Json& value) {
  check_encodable(value, 0);
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json canonical_parse(const std::string& text) {
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) fail(ErrorCode::BadRequest, "malformed JSON");
  check_encodable(value, 0);
  return value;
}

std::string canonical_digest(const Json& value) {
  return crypto::sha256_hex(canonical_encode(value));
}

}  // namespace dhlink
