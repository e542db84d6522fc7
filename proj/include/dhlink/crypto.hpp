#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dhlink::crypto {

using Bytes = std::vector<unsigned char>;

// Payload cipher suite: X25519 key agreement, HKDF-SHA256 key derivation,
// ChaCha20-Poly1305 (IETF, 12-byte nonce) sealing.
// Ciphertext layout: ephemeralPublicKey(32) || nonce(12) || sealed(len+16).
inline constexpr size_t kPublicKeyBytes = 32;
inline constexpr size_t kSecretKeyBytes = 32;
inline constexpr size_t kNonceBytes = 12;
inline constexpr size_t kTagBytes = 16;
inline constexpr size_t kCiphertextOverhead =
    kPublicKeyBytes + kNonceBytes + kTagBytes;
inline constexpr const char* kSuiteId = "x25519-hkdf-sha256-chacha20poly1305";

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

void init();

KeyPair generate_keypair();

// Seals plaintext to the holder of the secret key matching public_key. A fresh
// ephemeral keypair and nonce are drawn per call, so repeated encryptions of
// the same plaintext differ.
Bytes encrypt_payload(const Bytes& public_key, std::string_view plaintext);

// Throws ErrorCode::DecryptFailure on wrong key, truncation, or any
// authentication failure.
std::string decrypt_payload(const Bytes& secret_key, const Bytes& ciphertext);

// HKDF-SHA256 (RFC 5869) extract+expand.
Bytes hkdf_sha256(const Bytes& salt, const Bytes& ikm, std::string_view info,
                  size_t out_len);

std::string sha256_hex(std::string_view data);
Bytes hmac_sha256(const Bytes& key, std::string_view message);

}  // namespace dhlink::crypto
