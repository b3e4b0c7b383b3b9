#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "bvote/bytes.hpp"
#include "bvote/crypto.hpp"

namespace bvote {

/// ISO 14443 UID: 4 (single), 7 (double) or 10 (triple) bytes.
class Uid {
public:
    explicit Uid(Bytes bytes);  // throws ContractError on invalid length
    static Uid from_hex(const std::string& hex) { return Uid(bvote::from_hex(hex)); }

    const Bytes& bytes() const { return bytes_; }
    uint8_t size() const { return static_cast<uint8_t>(bytes_.size()); }
    std::string to_hex() const { return bvote::to_hex(bytes_); }

    auto operator<=>(const Uid&) const = default;

private:
    Bytes bytes_;
};

/// What a reader gets from a card: the cleartext UID plus the issued token.
struct CardImage {
    Uid uid;
    std::array<uint8_t, crypto::kBlockSize> token{};
};

enum class VoterStatus : uint8_t { NotVoted = 0, Voted = 1 };

struct VoterRecord {
    VoterStatus status = VoterStatus::NotVoted;
    uint64_t voted_at = 0;  // simulated ms; meaningful only when Voted
    auto operator<=>(const VoterRecord&) const = default;
};

struct VoterRegistry {
    std::map<Uid, VoterRecord> entries;
    crypto::Digest256 key_fingerprint{};  // checksum of the registry key bytes
    bool operator==(const VoterRegistry&) const = default;
};

enum class AuthResult : uint8_t { Eligible, AlreadyVoted, UnknownVoter, InvalidToken };

const char* to_string(AuthResult r);

/// byte 0 = uid length, bytes 1..len = uid, remainder zero. Injective.
std::array<uint8_t, crypto::kBlockSize> canonical_uid_block(const Uid& uid);

CardImage issue_card(const Uid& uid, const crypto::Aes128Key& card_key);
bool verify_card(const CardImage& card, const crypto::Aes128Key& card_key);

/// Precedence: InvalidToken > UnknownVoter > AlreadyVoted > Eligible.
/// Read-only; never mutates the registry.
AuthResult authenticate(const VoterRegistry& registry, const CardImage& card,
                        const crypto::Aes128Key& card_key);

/// NotVoted -> Voted. Throws RegistryError{UnknownVoter} if absent,
/// RegistryError{AlreadyVoted} if already Voted.
void mark_voted(VoterRegistry& registry, const Uid& uid, uint64_t at);

VoterRegistry create_registry(std::span<const Uid> uids, const crypto::Aes128Key& registry_key);

/// File format: "BVR1" || iv(16) || encrypt_packet(plaintext) where
/// plaintext = count:u32 || {uid_len:u8, uid, status:u8, voted_at:u64}* ||
/// checksum(all preceding plaintext bytes). Integers little-endian.
Bytes save_registry(const VoterRegistry& registry, const crypto::Aes128Key& registry_key,
                    const crypto::Iv128& iv);
VoterRegistry load_registry(std::span<const uint8_t> data, const crypto::Aes128Key& registry_key);

}  // namespace bvote
