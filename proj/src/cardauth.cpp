#include "bvote/cardauth.hpp"

#include "bvote/errors.hpp"

namespace bvote {

using crypto::Aes128Key;
using crypto::Digest256;
using crypto::Iv128;
using crypto::kBlockSize;

Uid::Uid(Bytes bytes) : bytes_(std::move(bytes)) {
    size_t n = bytes_.size();
    if (n != 4 && n != 7 && n != 10) throw ContractError("uid length must be 4, 7 or 10");
}

const char* to_string(AuthResult r) {
    switch (r) {
        case AuthResult::Eligible: return "Eligible";
        case AuthResult::AlreadyVoted: return "AlreadyVoted";
        case AuthResult::UnknownVoter: return "UnknownVoter";
        case AuthResult::InvalidToken: return "InvalidToken";
    }
    return "?";
}

std::array<uint8_t, kBlockSize> canonical_uid_block(const Uid& uid) {
    std::array<uint8_t, kBlockSize> block{};
    block[0] = uid.size();
    std::copy(uid.bytes().begin(), uid.bytes().end(), block.begin() + 1);
    return block;
}

CardImage issue_card(const Uid& uid, const Aes128Key& card_key) {
    return CardImage{uid, crypto::aes128_encrypt_block(card_key, canonical_uid_block(uid))};
}

bool verify_card(const CardImage& card, const Aes128Key& card_key) {
    return crypto::aes128_encrypt_block(card_key, canonical_uid_block(card.uid)) == card.token;
}

AuthResult authenticate(const VoterRegistry& registry, const CardImage& card,
                        const Aes128Key& card_key) {
    if (!verify_card(card, card_key)) return AuthResult::InvalidToken;
    auto it = registry.entries.find(card.uid);
    if (it == registry.entries.end()) return AuthResult::UnknownVoter;
    if (it->second.status == VoterStatus::Voted) return AuthResult::AlreadyVoted;
    return AuthResult::Eligible;
}

void mark_voted(VoterRegistry& registry, const Uid& uid, uint64_t at) {
    auto it = registry.entries.find(uid);
    if (it == registry.entries.end())
        throw RegistryError(RegistryError::Kind::UnknownVoter, "mark_voted: uid not registered");
    if (it->second.status == VoterStatus::Voted)
        throw RegistryError(RegistryError::Kind::AlreadyVoted, "mark_voted: uid already voted");
    it->second = VoterRecord{VoterStatus::Voted, at};
}

VoterRegistry create_registry(std::span<const Uid> uids, const Aes128Key& registry_key) {
    VoterRegistry r;
    for (const Uid& u : uids) {
        if (!r.entries.emplace(u, VoterRecord{}).second)
            throw ContractError("duplicate uid in registry");
    }
    r.key_fingerprint = crypto::checksum(registry_key.bytes);
    return r;
}

Bytes save_registry(const VoterRegistry& registry, const Aes128Key& registry_key,
                    const Iv128& iv) {
    ByteWriter body;
    body.u32(static_cast<uint32_t>(registry.entries.size()));
    for (const auto& [uid, rec] : registry.entries) {
        body.u8(uid.size());
        body.raw(uid.bytes());
        body.u8(static_cast<uint8_t>(rec.status));
        body.u64(rec.voted_at);
    }
    Digest256 sum = crypto::checksum(body.bytes());
    body.raw(sum.bytes);

    ByteWriter out;
    out.raw("BVR1");
    out.raw(iv.bytes);
    out.raw(crypto::encrypt_packet(registry_key, iv, body.bytes()));
    return out.take();
}

VoterRegistry load_registry(std::span<const uint8_t> data, const Aes128Key& registry_key) {
    try {
        ByteReader r(data);
        if (!r.expect_magic("BVR1")) throw RegistryCorrupt("bad registry magic");
        Iv128 iv;
        iv.bytes = r.take_array<16>();
        Bytes plain = crypto::decrypt_packet(registry_key, iv, r.take(r.remaining()));

        if (plain.size() < 4 + crypto::kDigestSize) throw RegistryCorrupt("registry too short");
        size_t body_len = plain.size() - crypto::kDigestSize;
        Digest256 stored;
        std::copy(plain.begin() + body_len, plain.end(), stored.bytes.begin());
        Digest256 computed = crypto::checksum(std::span(plain).first(body_len));
        if (stored != computed) throw RegistryCorrupt("registry checksum mismatch");

        ByteReader body{std::span(plain).first(body_len)};
        uint32_t count = body.u32();
        VoterRegistry reg;
        for (uint32_t i = 0; i < count; ++i) {
            uint8_t len = body.u8();
            if (len != 4 && len != 7 && len != 10) throw RegistryCorrupt("bad uid length");
            auto uid_bytes = body.take(len);
            uint8_t status = body.u8();
            if (status > 1) throw RegistryCorrupt("bad voter status");
            uint64_t at = body.u64();
            Uid uid(Bytes(uid_bytes.begin(), uid_bytes.end()));
            if (!reg.entries.emplace(uid, VoterRecord{static_cast<VoterStatus>(status), at}).second)
                throw RegistryCorrupt("duplicate uid");
        }
        if (!body.done()) throw RegistryCorrupt("trailing bytes after entries");
        reg.key_fingerprint = crypto::checksum(registry_key.bytes);
        return reg;
    } catch (const RegistryCorrupt&) {
        throw;
    } catch (const std::exception& e) {
        // Padding failures, short reads and malformed ciphertext all collapse
        // into the same corrupt-file signal: a wrong key is indistinguishable
        // from a damaged file by design.
        throw RegistryCorrupt(std::string("registry unreadable: ") + e.what());
    }
}

}  // namespace bvote
