#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bvote/bytes.hpp"
#include "bvote/cardauth.hpp"

namespace bvote {

struct Candidate {
    uint16_t id = 0;
    std::string name;
    bool operator==(const Candidate&) const = default;
};

/// Ordered candidate list, fixed for an election.
struct Ballot {
    std::vector<Candidate> candidates;

    bool has_candidate(uint16_t id) const;
    std::optional<size_t> index_of(uint16_t id) const;
};

/// Throws ConfigError unless the ballot is non-empty with unique ids.
void validate_ballot(const Ballot& ballot);

struct VotePacket {
    Uid uid;
    uint16_t candidate_id = 0;
    uint64_t timestamp = 0;  // simulated ms at vote confirmation
    auto operator<=>(const VotePacket&) const = default;
};

/// Layout: uid_len:u8 || uid || candidate_id:u16 || timestamp:u64 (little-endian).
Bytes build_vote_packet(const Uid& uid, uint16_t candidate_id, uint64_t timestamp);
Bytes build_vote_packet(const VotePacket& packet);

/// Exact inverse of build_vote_packet. Throws MalformedPacket on wrong length
/// or invalid uid_len.
VotePacket parse_vote_packet(std::span<const uint8_t> data);

}  // namespace bvote
