#pragma once

#include <json.hpp>

namespace dhlink {

// std::map-backed, so object keys iterate in ascending code-unit order.
// Canonical encoding depends on this ordering; do not switch to ordered_json.
using Json = nlohmann::json;

}  // namespace dhlink
