#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>

#include "bvote/bytes.hpp"
#include "bvote/errors.hpp"

namespace bvote::crypto {

inline constexpr size_t kBlockSize = 16;
inline constexpr size_t kDigestSize = 32;

/// 128-bit AES key. Distinct protocol roles (card key, vote key, registry key,
/// device MAC key) each carry their own value.
struct Aes128Key {
    std::array<uint8_t, kBlockSize> bytes{};

    static Aes128Key from_hex(const std::string& hex) { return {array_from_hex<kBlockSize>(hex)}; }
    std::string to_hex() const { return bvote::to_hex(bytes); }
    auto operator<=>(const Aes128Key&) const = default;
};

/// Per-record CBC initialization vector. Within one log, (key, IV) pairs never
/// repeat across entries; IVs come from the scenario's deterministic stream.
struct Iv128 {
    std::array<uint8_t, kBlockSize> bytes{};

    static Iv128 from_hex(const std::string& hex) { return {array_from_hex<kBlockSize>(hex)}; }
    std::string to_hex() const { return bvote::to_hex(bytes); }
    auto operator<=>(const Iv128&) const = default;
};

/// SHA-256 output: checksums, chain links, and MAC tags.
struct Digest256 {
    std::array<uint8_t, kDigestSize> bytes{};

    static Digest256 from_hex(const std::string& hex) { return {array_from_hex<kDigestSize>(hex)}; }
    std::string to_hex() const { return bvote::to_hex(bytes); }
    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }
    auto operator<=>(const Digest256&) const = default;
};

/// AES-128 block cipher: ten rounds of SubBytes, ShiftRows, MixColumns and
/// AddRoundKey over 16-byte blocks, with the inverse cipher for decryption.
/// Round keys are expanded once at construction.
class Aes128 {
public:
    explicit Aes128(const Aes128Key& key);

    void encrypt_block(std::span<const uint8_t> in, std::span<uint8_t> out) const;
    void decrypt_block(std::span<const uint8_t> in, std::span<uint8_t> out) const;

private:
    std::array<uint8_t, kBlockSize*(10 + 1)> round_keys_{};
};

std::array<uint8_t, kBlockSize> aes128_encrypt_block(const Aes128Key& key,
                                                     std::span<const uint8_t> block);
std::array<uint8_t, kBlockSize> aes128_decrypt_block(const Aes128Key& key,
                                                     std::span<const uint8_t> block);

/// CBC over PKCS#7-padded plaintext. Output length is ceil((len+1)/16)*16.
/// Throws ContractError on empty plaintext.
Bytes encrypt_packet(const Aes128Key& key, const Iv128& iv, std::span<const uint8_t> plaintext);

/// Inverse of encrypt_packet. Throws MalformedCiphertext when the input is not
/// a positive multiple of 16 bytes, PaddingError when the PKCS#7 tail is
/// invalid (tampering or wrong key).
Bytes decrypt_packet(const Aes128Key& key, const Iv128& iv, std::span<const uint8_t> ciphertext);

/// SHA-256 of `data` (empty input allowed).
Digest256 checksum(std::span<const uint8_t> data);

/// Hash-chain step: checksum(prev || entry_bytes). Genesis entries pass an
/// all-zero digest as prev.
Digest256 chain_hash(const Digest256& prev, std::span<const uint8_t> entry_bytes);

Digest256 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> message);

/// Per-device keyed tag over an entry's chain hash; the artifact's stand-in
/// for a per-session signature.
Digest256 device_mac(const Aes128Key& device_key, const Digest256& entry_hash);

}  // namespace bvote::crypto
