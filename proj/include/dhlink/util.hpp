#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace dhlink::util {

std::string to_hex(const unsigned char* data, size_t len);
std::string to_hex(const std::vector<unsigned char>& data);
std::vector<unsigned char> from_hex(std::string_view hex);

// Unpadded base64url (RFC 4648 §5). decode rejects non-alphabet characters
// and non-canonical tails.
std::string base64url_encode(std::string_view bytes);
std::string base64url_decode(std::string_view text);

// Milliseconds since the Unix epoch. Components take an injectable Clock so
// tests and the scenario harness can drive simulated time.
using Clock = std::function<int64_t()>;
int64_t now_ms();
Clock system_clock();

std::vector<unsigned char> random_bytes(size_t n);
std::string random_hex(size_t n_bytes);

bool is_valid_topic_name(std::string_view name);  // [a-z0-9-]{1,64}
bool is_valid_identifier(std::string_view name);  // [A-Za-z0-9_-]{1,64}

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);
void restrict_permissions(const std::string& path);  // owner rw only
std::vector<std::string> list_dir(const std::string& path);
void remove_all(const std::string& path);

}  // namespace dhlink::util
