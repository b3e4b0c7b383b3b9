#include "reference_crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <stdexcept>

namespace refcrypto {

namespace {
std::array<uint8_t, 16> aes128_ecb(std::span<const uint8_t> key, std::span<const uint8_t> block,
                                   bool enc) {
    if (key.size() != 16 || block.size() != 16) throw std::invalid_argument("need 16-byte key/block");
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    std::array<uint8_t, 32> buf{};
    int out_len = 0, fin_len = 0;
    bool ok = EVP_CipherInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr, enc ? 1 : 0) &&
              EVP_CIPHER_CTX_set_padding(ctx, 0) &&
              EVP_CipherUpdate(ctx, buf.data(), &out_len, block.data(), 16) &&
              EVP_CipherFinal_ex(ctx, buf.data() + out_len, &fin_len);
    EVP_CIPHER_CTX_free(ctx);
    if (!ok || out_len + fin_len != 16) throw std::runtime_error("openssl aes failed");
    std::array<uint8_t, 16> out{};
    std::copy_n(buf.begin(), 16, out.begin());
    return out;
}
}  // namespace

std::array<uint8_t, 16> aes128_ecb_encrypt(std::span<const uint8_t> key,
                                           std::span<const uint8_t> block) {
    return aes128_ecb(key, block, true);
}

std::array<uint8_t, 16> aes128_ecb_decrypt(std::span<const uint8_t> key,
                                           std::span<const uint8_t> block) {
    return aes128_ecb(key, block, false);
}

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
    std::array<uint8_t, 32> out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

std::array<uint8_t, 32> hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> msg) {
    std::array<uint8_t, 32> out{};
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), out.data(),
         &len);
    if (len != 32) throw std::runtime_error("openssl hmac failed");
    return out;
}

}  // namespace refcrypto
