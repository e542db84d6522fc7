#include "dhlink/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink::crypto {

namespace {

constexpr const char* kHkdfInfo = "dhlink-payload-v1";

void ensure_init() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0)
      fail(ErrorCode::IoError, "libsodium initialisation failed");
  });
}

// Raw X25519 shared secret; rejects the all-zero output produced by
// low-order peer points.
Bytes x25519(const Bytes& secret_key, const Bytes& peer_public) {
  Bytes shared(crypto_scalarmult_BYTES);
  if (crypto_scalarmult(shared.data(), secret_key.data(),
                        peer_public.data()) != 0)
    fail(ErrorCode::DecryptFailure, "key agreement failed");
  unsigned char acc = 0;
  for (unsigned char b : shared) acc |= b;
  if (acc == 0) fail(ErrorCode::DecryptFailure, "degenerate shared secret");
  return shared;
}

Bytes derive_symmetric_key(const Bytes& shared, const Bytes& ephemeral_public,
                           const Bytes& recipient_public) {
  Bytes salt;
  salt.reserve(kPublicKeyBytes * 2);
  salt.insert(salt.end(), ephemeral_public.begin(), ephemeral_public.end());
  salt.insert(salt.end(), recipient_public.begin(), recipient_public.end());
  return hkdf_sha256(salt, shared, kHkdfInfo,
                     crypto_aead_chacha20poly1305_ietf_KEYBYTES);
}

}  // namespace

void init() { ensure_init(); }

KeyPair generate_keypair() {
  ensure_init();
  KeyPair kp;
  kp.secret_key.resize(kSecretKeyBytes);
  kp.public_key.resize(kPublicKeyBytes);
  randombytes_buf(kp.secret_key.data(), kp.secret_key.size());
  crypto_scalarmult_base(kp.public_key.data(), kp.secret_key.data());
  return kp;
}

Bytes encrypt_payload(const Bytes& public_key, std::string_view plaintext) {
  ensure_init();
  if (public_key.size() != kPublicKeyBytes)
    fail(ErrorCode::BadRequest, "public key must be 32 bytes");
  if (plaintext.empty()) fail(ErrorCode::BadRequest, "empty plaintext");

  KeyPair ephemeral = generate_keypair();
  Bytes shared = x25519(ephemeral.secret_key, public_key);
  Bytes key = derive_symmetric_key(shared, ephemeral.public_key, public_key);
  sodium_memzero(shared.data(), shared.size());

  Bytes out(kCiphertextOverhead + plaintext.size());
  std::memcpy(out.data(), ephemeral.public_key.data(), kPublicKeyBytes);
  unsigned char* nonce = out.data() + kPublicKeyBytes;
  randombytes_buf(nonce, kNonceBytes);

  unsigned long long sealed_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(
      out.data() + kPublicKeyBytes + kNonceBytes, &sealed_len,
      reinterpret_cast<const unsigned char*>(plaintext.data()),
      plaintext.size(), nullptr, 0, nullptr, nonce, key.data());
  sodium_memzero(key.data(), key.size());
  sodium_memzero(ephemeral.secret_key.data(), ephemeral.secret_key.size());
  out.resize(kPublicKeyBytes + kNonceBytes + sealed_len);
  return out;
}

std::string decrypt_payload(const Bytes& secret_key, const Bytes& ciphertext) {
  ensure_init();
  if (secret_key.size() != kSecretKeyBytes)
    fail(ErrorCode::BadRequest, "secret key must be 32 bytes");
  if (ciphertext.size() < kCiphertextOverhead + 1)
    fail(ErrorCode::DecryptFailure, "ciphertext below minimum length");

  Bytes ephemeral_public(ciphertext.begin(),
                         ciphertext.begin() + kPublicKeyBytes);
  const unsigned char* nonce = ciphertext.data() + kPublicKeyBytes;
  const unsigned char* sealed = nonce + kNonceBytes;
  size_t sealed_len = ciphertext.size() - kPublicKeyBytes - kNonceBytes;

  Bytes recipient_public(kPublicKeyBytes);
  crypto_scalarmult_base(recipient_public.data(), secret_key.data());

  Bytes shared = x25519(secret_key, ephemeral_public);
  Bytes key = derive_symmetric_key(shared, ephemeral_public, recipient_public);
  sodium_memzero(shared.data(), shared.size());

  std::string plaintext(sealed_len - kTagBytes, '\0');
  unsigned long long plain_len = 0;
  int rc = crypto_aead_chacha20poly1305_ietf_decrypt(
      reinterpret_cast<unsigned char*>(plaintext.data()), &plain_len, nullptr,
      sealed, sealed_len, nullptr, 0, nonce, key.data());
  sodium_memzero(key.data(), key.size());
  if (rc != 0) fail(ErrorCode::DecryptFailure, "authentication failed");
  plaintext.resize(plain_len);
  return plaintext;
}

Bytes hkdf_sha256(const Bytes& salt, const Bytes& ikm, std::string_view info,
                  size_t out_len) {
  ensure_init();
  if (out_len > 255 * crypto_auth_hmacsha256_BYTES)
    fail(ErrorCode::BadRequest, "hkdf output too long");

  // Extract: PRK = HMAC(salt, IKM). An absent salt is a zero-filled key.
  Bytes prk(crypto_auth_hmacsha256_BYTES);
  {
    crypto_auth_hmacsha256_state st;
    Bytes effective_salt = salt;
    if (effective_salt.empty())
      effective_salt.assign(crypto_auth_hmacsha256_BYTES, 0);
    crypto_auth_hmacsha256_init(&st, effective_salt.data(),
                                effective_salt.size());
    crypto_auth_hmacsha256_update(&st, ikm.data(), ikm.size());
    crypto_auth_hmacsha256_final(&st, prk.data());
  }

  // Expand: T(i) = HMAC(PRK, T(i-1) || info || i).
  Bytes out;
  out.reserve(out_len);
  Bytes block;
  unsigned char counter = 1;
  while (out.size() < out_len) {
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, prk.data(), prk.size());
    crypto_auth_hmacsha256_update(&st, block.data(), block.size());
    crypto_auth_hmacsha256_update(
        &st, reinterpret_cast<const unsigned char*>(info.data()), info.size());
    crypto_auth_hmacsha256_update(&st, &counter, 1);
    block.resize(crypto_auth_hmacsha256_BYTES);
    crypto_auth_hmacsha256_final(&st, block.data());
    size_t take = std::min(block.size(), out_len - out.size());
    out.insert(out.end(), block.begin(), block.begin() + take);
    ++counter;
  }
  sodium_memzero(prk.data(), prk.size());
  return out;
}

std::string sha256_hex(std::string_view data) {
  ensure_init();
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(data.data()),
                     data.size());
  return util::to_hex(digest, sizeof(digest));
}

Bytes hmac_sha256(const Bytes& key, std::string_view message) {
  ensure_init();
  Bytes mac(crypto_auth_hmacsha256_BYTES);
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(
      &st, reinterpret_cast<const unsigned char*>(message.data()),
      message.size());
  crypto_auth_hmacsha256_final(&st, mac.data());
  return mac;
}

}  // namespace dhlink::crypto
