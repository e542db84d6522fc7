#pragma once

#include <string>

#include "dhlink/json.hpp"

namespace dhlink {

// Canonical encoding: compact JSON with object keys in ascending code-unit
// order, UTF-8, no insignificant whitespace. Two structurally equal values
// always produce byte-identical encodings, so digests and ciphertexts are
// stable across processes.
//
// Values containing null, NaN, infinity, or binary blobs are not encodable
// and raise NonEncodable.
std::string canonical_encode(const Json& value);

// Parses text and returns the parsed value after checking encodability.
// Raises BadRequest on malformed JSON.
Json canonical_parse(const std::string& text);

// sha256 of the canonical encoding, lowercase hex.
std::string canonical_digest(const Json& value);

}  // namespace dhlink
