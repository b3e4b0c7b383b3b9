#include "bvote/vote_packet.hpp"

#include "doctest.h"

#include "bvote/errors.hpp"
#include "bvote/rng.hpp"

using namespace bvote;

TEST_CASE("ballot lookup and validation") {
    Ballot b{{{1, "Alpha"}, {2, "Beta"}, {7, "Gamma"}}};
    CHECK(b.has_candidate(2));
    CHECK_FALSE(b.has_candidate(3));
    CHECK(b.index_of(7) == size_t{2});
    CHECK_FALSE(b.index_of(9).has_value());
    CHECK_NOTHROW(validate_ballot(b));

    CHECK_THROWS_AS(validate_ballot(Ballot{}), ConfigError);
    CHECK_THROWS_AS(validate_ballot(Ballot{{{1, "A"}, {1, "B"}}}), ConfigError);
}

TEST_CASE("packet bytes match the worked example") {
    Bytes raw = build_vote_packet(Uid::from_hex("01020304"), 3, 1000);
    CHECK(to_hex(raw) == "04010203040300e803000000000000");
    CHECK(raw.size() == 15);

    VotePacket back = parse_vote_packet(raw);
    CHECK(back.uid == Uid::from_hex("01020304"));
    CHECK(back.candidate_id == 3);
    CHECK(back.timestamp == 1000);
}

TEST_CASE("packet round-trips every uid length and extreme values") {
    DeterministicRng rng(5);
    for (int i = 0; i < 200; ++i) {
        VotePacket p{Uid(rng.bytes(std::array<size_t, 3>{4, 7, 10}[i % 3])),
                     static_cast<uint16_t>(rng.uniform(0, 65535)), rng.next_u64()};
        CHECK(parse_vote_packet(build_vote_packet(p)) == p);
    }
}

TEST_CASE("malformed packets are rejected") {
    Bytes good = build_vote_packet(Uid::from_hex("01020304"), 3, 1000);

    // Truncations at every prefix length.
    for (size_t keep = 0; keep < good.size(); ++keep)
        CHECK_THROWS_AS(parse_vote_packet(Bytes(good.begin(), good.begin() + keep)),
                        MalformedPacket);

    // Trailing garbage.
    Bytes padded = good;
    padded.push_back(0);
    CHECK_THROWS_AS(parse_vote_packet(padded), MalformedPacket);

    // Invalid uid length markers.
    for (uint8_t bad_len : {0, 1, 3, 5, 8, 11, 255}) {
        Bytes b = good;
        b[0] = bad_len;
        CHECK_THROWS_AS(parse_vote_packet(b), MalformedPacket);
    }
}
