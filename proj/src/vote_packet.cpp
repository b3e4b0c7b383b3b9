#include "bvote/vote_packet.hpp"

#include <set>

#include "bvote/errors.hpp"

namespace bvote {

bool Ballot::has_candidate(uint16_t id) const { return index_of(id).has_value(); }

std::optional<size_t> Ballot::index_of(uint16_t id) const {
    for (size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].id == id) return i;
    return std::nullopt;
}

void validate_ballot(const Ballot& ballot) {
    if (ballot.candidates.empty()) throw ConfigError("ballot has no candidates");
    std::set<uint16_t> ids;
    for (const Candidate& c : ballot.candidates)
        if (!ids.insert(c.id).second)
            throw ConfigError("duplicate candidate id " + std::to_string(c.id));
}

Bytes build_vote_packet(const Uid& uid, uint16_t candidate_id, uint64_t timestamp) {
    ByteWriter w;
    w.u8(uid.size());
    w.raw(uid.bytes());
    w.u16(candidate_id);
    w.u64(timestamp);
    return w.take();
}

Bytes build_vote_packet(const VotePacket& packet) {
    return build_vote_packet(packet.uid, packet.candidate_id, packet.timestamp);
}

VotePacket parse_vote_packet(std::span<const uint8_t> data) {
    try {
        ByteReader r(data);
        uint8_t len = r.u8();
        if (len != 4 && len != 7 && len != 10) throw MalformedPacket("bad uid length in packet");
        auto uid_bytes = r.take(len);
        uint16_t candidate = r.u16();
        uint64_t ts = r.u64();
        if (!r.done()) throw MalformedPacket("trailing bytes in packet");
        return VotePacket{Uid(Bytes(uid_bytes.begin(), uid_bytes.end())), candidate, ts};
    } catch (const MalformedPacket&) {
        throw;
    } catch (const std::out_of_range&) {
        throw MalformedPacket("packet truncated");
    }
}

}  // namespace bvote
