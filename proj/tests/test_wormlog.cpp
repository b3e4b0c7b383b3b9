#include "bvote/wormlog.hpp"

#include <filesystem>

#include "doctest.h"

#include "bvote/errors.hpp"
#include "bvote/rng.hpp"
#include "bvote/vote_packet.hpp"
#include "test_dirs.hpp"

using namespace bvote;
using crypto::Aes128Key;
using crypto::Digest256;
using crypto::Iv128;

namespace {

const DeviceId kDev = device_id_from_string("TERM0001");
const Aes128Key kDeviceKey = Aes128Key::from_hex("303132333435363738393a3b3c3d3e3f");
const Aes128Key kVoteKey = Aes128Key::from_hex("101112131415161718191a1b1c1d1e1f");

Bytes pinned_ct1() {
    return crypto::encrypt_packet(kVoteKey, Iv128::from_hex("202122232425262728292a2b2c2d2e2f"),
                                  build_vote_packet(Uid::from_hex("01020304"), 3, 12400));
}

// A log whose entries carry deterministic but unremarkable payloads.
WormLog make_log(const std::string& path, int n, uint64_t rng_seed = 99) {
    DeterministicRng rng(rng_seed);
    WormLog log = WormLog::open(path, kDev, kDeviceKey, OpenMode::Append);
    for (int i = 0; i < n; ++i) {
        Iv128 iv;
        rng.fill(iv.bytes);
        Bytes ct = crypto::encrypt_packet(
            kVoteKey, iv, build_vote_packet(Uid(rng.bytes(4)), uint16_t(i % 5), 1000 + i));
        log.append(1000 + i, iv, ct);
    }
    return log;
}

}  // namespace

TEST_CASE("device ids are exactly 8 printable characters") {
    CHECK(device_id_to_string(device_id_from_string("TERM0001")) == "TERM0001");
    for (const char* bad : {"", "TERM1", "TERM00001", "TERM\x01""01"})
        CHECK_THROWS_AS(device_id_from_string(bad), ContractError);
}

TEST_CASE("genesis entry matches the independently computed pin") {
    Bytes ct = pinned_ct1();
    CHECK(to_hex(ct) == "26f8dea7ea7b91387c07271c8ad58267");

    LogEntry e = make_entry(kDev, 0, 12500, Iv128::from_hex("202122232425262728292a2b2c2d2e2f"),
                            ct, Digest256{}, kDeviceKey);
    CHECK(e.entry_hash.to_hex() == "2ccd0cb74a8501eadedaa35767805f96fbf592eed7e40e9c570855c3881be925");
    CHECK(e.mac.to_hex() == "740f9636ae879f2f5d5e31fad4e8d83c11cd8b0f5c59805cde1691db6c5d049a");
    CHECK(entry_verifies(e, Digest256{}, kDeviceKey));

    // Chained successor pin.
    Bytes ct2 = crypto::encrypt_packet(
        kVoteKey, Iv128::from_hex("303132333435363738393a3b3c3d3e40"),
        build_vote_packet(Uid::from_hex("0102030405060a"), 1, 26000));
    LogEntry e2 = make_entry(kDev, 1, 26100, Iv128::from_hex("303132333435363738393a3b3c3d3e40"),
                             ct2, e.entry_hash, kDeviceKey);
    CHECK(e2.entry_hash.to_hex() == "6004eddc4f9d19afb7255f329570b6dfa24ad217fe2b849e081ae89180d6a213");
}

TEST_CASE("log file bytes match the independently computed pin") {
    std::string dir = test_dir("wormlog_pin");
    WormLog log = WormLog::open(dir + "/a.log", kDev, kDeviceKey, OpenMode::Append);
    log.append(12500, Iv128::from_hex("202122232425262728292a2b2c2d2e2f"), pinned_ct1());

    Bytes file = read_file(dir + "/a.log");
    CHECK(file.size() == 12 + 4 + 142);
    CHECK(crypto::checksum(file).to_hex() ==
          "8b6d52b76f04f5f5ddd8f2a79b013358fe56a6d68da8dc7494701d0f12578e1f");
}

TEST_CASE("append assigns dense sequence numbers and chains hashes") {
    std::string dir = test_dir("wormlog_chain");
    WormLog log = make_log(dir + "/a.log", 10);
    CHECK(log.next_seq() == 10);
    Digest256 prev{};
    for (const LogEntry& e : log.entries()) {
        CHECK(e.prev_hash == prev);
        CHECK(entry_verifies(e, prev, kDeviceKey));
        prev = e.entry_hash;
    }
    CHECK(log.head_hash() == prev);

    VerifyReport rep = verify_log_file(dir + "/a.log", kDeviceKey);
    CHECK(rep.ok);
    CHECK(rep.entries == 10);
    CHECK_FALSE(rep.torn_tail);
}

TEST_CASE("reopening continues the chain exactly where it stopped") {
    std::string dir = test_dir("wormlog_reopen");
    Digest256 head;
    {
        WormLog log = make_log(dir + "/a.log", 4);
        head = log.head_hash();
    }
    WormLog again = WormLog::open(dir + "/a.log", kDev, kDeviceKey, OpenMode::Append);
    CHECK(again.next_seq() == 4);
    CHECK(again.head_hash() == head);

    Iv128 iv = Iv128::from_hex("000102030405060708090a0b0c0d0e0f");
    Bytes ct = crypto::encrypt_packet(kVoteKey, iv, build_vote_packet(Uid::from_hex("0a0b0c0d"), 1, 7));
    CHECK(again.append(9999, iv, ct) == 4);
    CHECK(again.entries().back().prev_hash == head);
    CHECK(verify_log_file(dir + "/a.log", kDeviceKey).ok);

    // Opening under a different device id is a caller bug.
    CHECK_THROWS_AS(
        WormLog::open(dir + "/a.log", device_id_from_string("TERM0002"), kDeviceKey, OpenMode::Append),
        ContractError);
    // Missing file in ReadOnly is an error, not an implicit create.
    CHECK_THROWS_AS(WormLog::open(dir + "/absent.log", kDev, kDeviceKey, OpenMode::ReadOnly),
                    StorageError);
}

TEST_CASE("every byte truncation either heals as a torn tail or keeps a clean prefix") {
    std::string dir = test_dir("wormlog_trunc");
    make_log(dir + "/full.log", 5);
    Bytes file = read_file(dir + "/full.log");

    // Record boundaries: 12-byte header, then each record is 4 + record_len.
    std::vector<size_t> boundaries{12};
    {
        size_t pos = 12;
        while (pos < file.size()) {
            uint32_t len = uint32_t(file[pos]) | uint32_t(file[pos + 1]) << 8 |
                           uint32_t(file[pos + 2]) << 16 | uint32_t(file[pos + 3]) << 24;
            pos += 4 + len;
            boundaries.push_back(pos);
        }
    }

    for (size_t keep = 0; keep <= file.size(); ++keep) {
        Bytes cut(file.begin(), file.begin() + keep);
        if (keep < 12) {
            CHECK_THROWS_AS(verify_log_bytes(cut, kDeviceKey), StorageError);
            continue;
        }
        VerifyReport rep = verify_log_bytes(cut, kDeviceKey);
        CHECK(rep.ok);
        size_t complete = 0;
        while (complete + 1 < boundaries.size() && boundaries[complete + 1] <= keep) ++complete;
        CHECK(rep.entries == complete);
        CHECK(rep.torn_tail == (keep != boundaries[complete]));

        // Append-mode open heals the torn tail physically and keeps going.
        std::string path = dir + "/cut.log";
        write_file(path, cut);
        WormLog healed = WormLog::open(path, kDev, kDeviceKey, OpenMode::Append);
        CHECK(healed.next_seq() == complete);
        CHECK(read_file(path).size() == boundaries[complete]);
    }
}

TEST_CASE("every single-byte flip in a complete log is reported as tampering") {
    std::string dir = test_dir("wormlog_flip");
    make_log(dir + "/full.log", 3);
    Bytes file = read_file(dir + "/full.log");

    for (size_t off = 0; off < file.size(); ++off) {
        Bytes bad = file;
        bad[off] ^= 0x01;
        if (off < 12) {
            // Header damage: unreadable or the wrong stream, never Ok.
            if (off < 4) {
                CHECK_THROWS_AS(verify_log_bytes(bad, kDeviceKey), StorageError);
            } else {
                // Device id flips break every entry's hash preimage.
                VerifyReport rep = verify_log_bytes(bad, kDeviceKey);
                CHECK_FALSE(rep.ok);
                CHECK(rep.tampered_seq == uint32_t{0});
            }
            continue;
        }
        VerifyReport rep = verify_log_bytes(bad, kDeviceKey);
        CHECK_FALSE(rep.ok);
        CHECK(rep.tampered_seq.has_value());

        // Append-mode open refuses the file rather than "healing" it.
        std::string path = dir + "/bad.log";
        write_file(path, bad);
        CHECK_THROWS_AS(WormLog::open(path, kDev, kDeviceKey, OpenMode::Append), TamperedError);
    }
}

TEST_CASE("verification with the wrong device key fails on the first mac") {
    std::string dir = test_dir("wormlog_wrongkey");
    make_log(dir + "/a.log", 2);
    VerifyReport rep = verify_log_file(dir + "/a.log", Aes128Key{});
    CHECK_FALSE(rep.ok);
    CHECK(rep.tampered_seq == uint32_t{0});
}

TEST_CASE("append failure injection leaves the log unchanged") {
    std::string dir = test_dir("wormlog_inject");
    WormLog log = make_log(dir + "/a.log", 2);
    Digest256 head = log.head_hash();
    log.inject_append_failures(1);
    Iv128 iv{};
    Bytes ct = crypto::encrypt_packet(kVoteKey, iv, build_vote_packet(Uid::from_hex("0a0b0c0d"), 1, 7));
    CHECK_THROWS_AS(log.append(5, iv, ct), StorageError);
    CHECK(log.next_seq() == 2);
    CHECK(log.head_hash() == head);
    CHECK(log.append(5, iv, ct) == 2);  // next attempt succeeds
    CHECK(verify_log_file(dir + "/a.log", kDeviceKey).ok);
}

TEST_CASE("read-only logs refuse append") {
    std::string dir = test_dir("wormlog_ro");
    make_log(dir + "/a.log", 1);
    WormLog ro = WormLog::open(dir + "/a.log", kDev, kDeviceKey, OpenMode::ReadOnly);
    Iv128 iv{};
    Bytes ct = crypto::encrypt_packet(kVoteKey, iv, build_vote_packet(Uid::from_hex("0a0b0c0d"), 1, 7));
    CHECK_THROWS_AS(ro.append(1, iv, ct), ContractError);
}

TEST_CASE("sync journal records, reopens, and tolerates identical repeats") {
    std::string dir = test_dir("journal_basic");
    {
        SyncJournal j = SyncJournal::open(dir + "/a.journal", OpenMode::Append);
        CHECK(j.next_batch_id() == 0);
        CHECK_FALSE(j.acked_head().has_value());
        j.record(0, 0, 19, 30000);
        j.record(1, 20, 39, 34800);
        j.record(1, 20, 39, 40000);  // duplicate ack later: no-op
        CHECK(j.next_batch_id() == 2);
        CHECK(j.acked_head() == uint32_t{39});
    }
    SyncJournal back = SyncJournal::open(dir + "/a.journal", OpenMode::ReadOnly);
    REQUIRE(back.entries().size() == 2);
    CHECK(back.entries()[0] == SyncJournalEntry{0, 0, 19, 30000});
    CHECK(back.entries()[1] == SyncJournalEntry{1, 20, 39, 34800});
}

TEST_CASE("sync journal rejects gaps, overlaps, and id reuse") {
    std::string dir = test_dir("journal_reject");
    SyncJournal j = SyncJournal::open(dir + "/a.journal", OpenMode::Append);
    j.record(0, 0, 9, 1);
    CHECK_THROWS_AS(j.record(2, 10, 19, 2), JournalCorrupt);   // id gap
    CHECK_THROWS_AS(j.record(1, 11, 19, 2), JournalCorrupt);   // seq gap
    CHECK_THROWS_AS(j.record(1, 9, 19, 2), JournalCorrupt);    // seq overlap
    CHECK_THROWS_AS(j.record(0, 0, 12, 2), JournalCorrupt);    // same id, new range
    CHECK_THROWS_AS(j.record(1, 19, 10, 2), JournalCorrupt);   // inverted range
    j.record(1, 10, 19, 2);
    CHECK(j.acked_head() == uint32_t{19});
}

TEST_CASE("corrupted journal records are refused on open") {
    std::string dir = test_dir("journal_corrupt");
    {
        SyncJournal j = SyncJournal::open(dir + "/a.journal", OpenMode::Append);
        j.record(0, 0, 9, 1);
        j.record(1, 10, 29, 2);
    }
    Bytes file = read_file(dir + "/a.journal");
    for (size_t off = 4; off < file.size(); ++off) {
        Bytes bad = file;
        bad[off] ^= 0x80;
        write_file(dir + "/bad.journal", bad);
        CHECK_THROWS_AS(SyncJournal::open(dir + "/bad.journal", OpenMode::ReadOnly),
                        JournalCorrupt);
    }

    // A partial trailing record (crash during append) is ignored, not fatal.
    Bytes torn(file.begin(), file.end() - 13);
    write_file(dir + "/torn.journal", torn);
    SyncJournal healed = SyncJournal::open(dir + "/torn.journal", OpenMode::Append);
    CHECK(healed.entries().size() == 1);
}

TEST_CASE("read_unsynced returns the exact un-acked tail") {
    std::string dir = test_dir("unsynced");
    WormLog log = make_log(dir + "/a.log", 7);
    SyncJournal j = SyncJournal::open(dir + "/a.journal", OpenMode::Append);

    CHECK(read_unsynced(log, j).size() == 7);
    j.record(0, 0, 4, 100);
    std::vector<LogEntry> tail = read_unsynced(log, j);
    REQUIRE(tail.size() == 2);
    CHECK(tail[0].seq_no == 5);
    CHECK(tail[1].seq_no == 6);
    j.record(1, 5, 6, 200);
    CHECK(read_unsynced(log, j).empty());

    // A journal claiming more than the log holds means the log tail was lost.
    j.record(2, 7, 9, 300);
    CHECK_THROWS_AS(read_unsynced(log, j), JournalCorrupt);
}
