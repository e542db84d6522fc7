#include "dhlink/crypto.hpp"

#include <gtest/gtest.h>

#include <string>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using crypto::Bytes;
using testing::code_of;

Bytes hexb(const std::string& hex) { return util::from_hex(hex); }

class CryptoTest : public ::testing::Test {
 protected:
  void SetUp() override { crypto::init(); }
};

TEST_F(CryptoTest, Sha256KnownAnswers) {
  EXPECT_EQ(crypto::sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(crypto::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CryptoTest, HmacSha256Rfc4231Vectors) {
  // RFC 4231 test case 1.
  Bytes key1(20, 0x0b);
  EXPECT_EQ(util::to_hex(crypto::hmac_sha256(key1, "Hi There")),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
  // RFC 4231 test case 2.
  Bytes key2{'J', 'e', 'f', 'e'};
  EXPECT_EQ(
      util::to_hex(crypto::hmac_sha256(key2, "what do ya want for nothing?")),
      "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_F(CryptoTest, HkdfSha256Rfc5869Case1) {
  Bytes ikm(22, 0x0b);
  Bytes salt = hexb("000102030405060708090a0b0c");
  const std::string info = {'\xf0', '\xf1', '\xf2', '\xf3', '\xf4',
                            '\xf5', '\xf6', '\xf7', '\xf8', '\xf9'};
  Bytes okm = crypto::hkdf_sha256(salt, ikm, info, 42);
  EXPECT_EQ(util::to_hex(okm),
            "3cb25f25faacd57a90434f64d0362f2a"
            "2d2d0a90cf1a5a4c5db02d56ecc4c5bf"
            "34007208d5b887185865");
}

TEST_F(CryptoTest, HkdfSha256Rfc5869Case2) {
  Bytes ikm, salt;
  std::string info;
  for (int i = 0x00; i <= 0x4f; ++i) ikm.push_back(static_cast<unsigned char>(i));
  for (int i = 0x60; i <= 0xaf; ++i) salt.push_back(static_cast<unsigned char>(i));
  for (int i = 0xb0; i <= 0xff; ++i) info.push_back(static_cast<char>(i));
  Bytes okm = crypto::hkdf_sha256(salt, ikm, info, 82);
  EXPECT_EQ(util::to_hex(okm),
            "b11e398dc80327a1c8e7f78c596a4934"
            "4f012eda2d4efad8a050cc4c19afa97c"
            "59045a99cac7827271cb41c65e590e09"
            "da3275600c2f09b8367793a9aca3db71"
            "cc30c58179ec3e87c14c01d5c1f3434f"
            "1d87");
}

TEST_F(CryptoTest, HkdfSha256Rfc5869Case3EmptySaltAndInfo) {
  Bytes ikm(22, 0x0b);
  Bytes okm = crypto::hkdf_sha256(Bytes{}, ikm, "", 42);
  EXPECT_EQ(util::to_hex(okm),
            "8da4e775a563c18f715f802a063c5a31"
            "b8a11f5c5ee1879ec3454e5f3c738d2d"
            "9d201395faa4b61a96c8");
}

TEST_F(CryptoTest, KeypairShapes) {
  crypto::KeyPair kp = crypto::generate_keypair();
  EXPECT_EQ(kp.public_key.size(), crypto::kPublicKeyBytes);
  EXPECT_EQ(kp.secret_key.size(), crypto::kSecretKeyBytes);
  crypto::KeyPair other = crypto::generate_keypair();
  EXPECT_NE(kp.public_key, other.public_key);
  EXPECT_NE(kp.secret_key, other.secret_key);
}

TEST_F(CryptoTest, SealOpenRoundTrip) {
  crypto::KeyPair kp = crypto::generate_keypair();
  const std::string plaintext = "vitals: {\"hr\":71}";
  Bytes ct = crypto::encrypt_payload(kp.public_key, plaintext);
  ASSERT_EQ(ct.size(), plaintext.size() + crypto::kCiphertextOverhead);
  EXPECT_EQ(crypto::decrypt_payload(kp.secret_key, ct), plaintext);
}

TEST_F(CryptoTest, OverheadIsSixtyBytesForEmptyAndLongInputs) {
  crypto::KeyPair kp = crypto::generate_keypair();
  EXPECT_EQ(crypto::kCiphertextOverhead, 60u);
  EXPECT_EQ(crypto::encrypt_payload(kp.public_key, "").size(), 60u);
  std::string big(100000, 'x');
  EXPECT_EQ(crypto::encrypt_payload(kp.public_key, big).size(),
            big.size() + 60u);
}

TEST_F(CryptoTest, RepeatedEncryptionsDiffer) {
  crypto::KeyPair kp = crypto::generate_keypair();
  Bytes a = crypto::encrypt_payload(kp.public_key, "same");
  Bytes b = crypto::encrypt_payload(kp.public_key, "same");
  EXPECT_NE(a, b);
  EXPECT_EQ(crypto::decrypt_payload(kp.secret_key, a), "same");
  EXPECT_EQ(crypto::decrypt_payload(kp.secret_key, b), "same");
}

TEST_F(CryptoTest, WrongKeyFailsToDecrypt) {
  crypto::KeyPair alice = crypto::generate_keypair();
  crypto::KeyPair mallory = crypto::generate_keypair();
  Bytes ct = crypto::encrypt_payload(alice.public_key, "secret");
  EXPECT_EQ(code_of([&] { crypto::decrypt_payload(mallory.secret_key, ct); }),
            ErrorCode::DecryptFailure);
}

TEST_F(CryptoTest, TamperedCiphertextFailsToDecrypt) {
  crypto::KeyPair kp = crypto::generate_keypair();
  Bytes ct = crypto::encrypt_payload(kp.public_key, "secret payload");
  for (size_t pos : {size_t{0}, size_t{33}, size_t{45}, ct.size() - 1}) {
    Bytes bad = ct;
    bad[pos] ^= 0x01;
    EXPECT_EQ(code_of([&] { crypto::decrypt_payload(kp.secret_key, bad); }),
              ErrorCode::DecryptFailure)
        << "flipped byte " << pos;
  }
}

TEST_F(CryptoTest, TruncatedCiphertextFailsToDecrypt) {
  crypto::KeyPair kp = crypto::generate_keypair();
  Bytes ct = crypto::encrypt_payload(kp.public_key, "secret payload");
  for (size_t len : {size_t{0}, size_t{31}, size_t{44}, size_t{59},
                     ct.size() - 1}) {
    Bytes cut(ct.begin(), ct.begin() + static_cast<long>(len));
    EXPECT_EQ(code_of([&] { crypto::decrypt_payload(kp.secret_key, cut); }),
              ErrorCode::DecryptFailure)
        << "truncated to " << len;
  }
}

TEST_F(CryptoTest, SuiteIdentifier) {
  EXPECT_STREQ(crypto::kSuiteId, "x25519-hkdf-sha256-chacha20poly1305");
}

}  // namespace
}  // namespace dhlink
