#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "bvote/bytes.hpp"
#include "bvote/cardauth.hpp"
#include "bvote/crypto.hpp"
#include "bvote/wormlog.hpp"
#include "test_dirs.hpp"

using namespace bvote;
using nlohmann::json;

namespace {

struct CmdResult {
    int rc = -1;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string(BVOTE_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[512];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::trunc) << text;
}

const std::string kCardKeyHex = "000102030405060708090a0b0c0d0e0f";
const std::string kVoteKeyHex = "101112131415161718191a1b1c1d1e1f";
const std::string kRegKeyHex = "202122232425262728292a2b2c2d2e2f";
const std::string kDevKeyHex = "303132333435363738393a3b3c3d3e3f";

std::string mini_scenario() {
    return R"({
  "seed": 3,
  "batch_size": 3,
  "keys": {
    "card_key": ")" + kCardKeyHex + R"(",
    "vote_key": ")" + kVoteKeyHex + R"(",
    "registry_key": ")" + kRegKeyHex + R"(",
    "device_keys": {"TERM0001": ")" + kDevKeyHex + R"("}
  },
  "ballot": [{"id": 1, "name": "Alpha"}, {"id": 2, "name": "Beta"}],
  "devices": ["TERM0001"],
  "voters": [
    {"uid": "01020304", "candidate": 1, "arrival_ms": 1000, "device": "TERM0001"},
    {"uid": "0a0b0c0d", "candidate": 2, "arrival_ms": 14600, "device": "TERM0001"}
  ]
})";
}

}  // namespace

TEST_CASE("gen-registry is deterministic and loadable") {
    std::string dir = test_dir("cli_gen");
    write_text(dir + "/reg.key", kRegKeyHex);

    CmdResult r = run_cli("gen-registry --count 12 --seed 9 --out " + dir + "/a.bin --key-file " +
                          dir + "/reg.key");
    CHECK(r.rc == 0);
    CmdResult r2 = run_cli("gen-registry --count 12 --seed 9 --out " + dir + "/b.bin --key-file " +
                           dir + "/reg.key");
    CHECK(r2.rc == 0);
    CHECK(read_file(dir + "/a.bin") == read_file(dir + "/b.bin"));

    VoterRegistry reg =
        load_registry(read_file(dir + "/a.bin"), crypto::Aes128Key::from_hex(kRegKeyHex));
    CHECK(reg.entries.size() == 12);
    for (const auto& [uid, rec] : reg.entries) CHECK(rec.status == VoterStatus::NotVoted);

    // A different seed gives a different roster.
    run_cli("gen-registry --count 12 --seed 10 --out " + dir + "/c.bin --key-file " + dir +
            "/reg.key");
    CHECK(read_file(dir + "/a.bin") != read_file(dir + "/c.bin"));

    // count=0 is a valid empty registry.
    CmdResult r0 = run_cli("gen-registry --count 0 --seed 9 --out " + dir + "/empty.bin" +
                           " --key-file " + dir + "/reg.key");
    CHECK(r0.rc == 0);
    CHECK(load_registry(read_file(dir + "/empty.bin"), crypto::Aes128Key::from_hex(kRegKeyHex))
              .entries.empty());
}

TEST_CASE("gen-registry usage errors exit 2") {
    std::string dir = test_dir("cli_gen_err");
    write_text(dir + "/short.key", "abcd");
    CHECK(run_cli("gen-registry --count 3 --seed 1 --out " + dir + "/r.bin --key-file " + dir +
                  "/short.key")
              .rc == 2);
    CHECK(run_cli("gen-registry --count 3 --seed 1 --out " + dir + "/r.bin --key-file " + dir +
                  "/missing.key")
              .rc == 2);
    write_text(dir + "/reg.key", kRegKeyHex);
    CHECK(run_cli("gen-registry --count 3 --seed 1 --out /nonexistent-dir/r.bin --key-file " +
                  dir + "/reg.key")
              .rc == 2);
    CHECK(run_cli("gen-registry --seed 1 --out " + dir + "/r.bin --key-file " + dir + "/reg.key")
              .rc == 2);  // missing required --count
}

TEST_CASE("issue-cards emits verifiable tokens for the whole roster") {
    std::string dir = test_dir("cli_cards");
    write_text(dir + "/reg.key", kRegKeyHex);
    write_text(dir + "/card.key", kCardKeyHex);
    REQUIRE(run_cli("gen-registry --count 8 --seed 4 --out " + dir + "/reg.bin --key-file " + dir +
                    "/reg.key")
                .rc == 0);
    CmdResult r = run_cli("issue-cards --registry " + dir + "/reg.bin --registry-key-file " + dir +
                          "/reg.key --card-key-file " + dir + "/card.key --out " + dir +
                          "/cards.json");
    REQUIRE(r.rc == 0);

    json doc = json::parse(read_file(dir + "/cards.json"));
    REQUIRE(doc["cards"].size() == 8);
    crypto::Aes128Key card_key = crypto::Aes128Key::from_hex(kCardKeyHex);
    for (const json& c : doc["cards"]) {
        CardImage card{Uid::from_hex(c["uid"].get<std::string>()),
                       array_from_hex<crypto::kBlockSize>(c["token"].get<std::string>())};
        CHECK(verify_card(card, card_key));
    }

    // Wrong registry key: the blob fails its checksum, an integrity failure.
    write_text(dir + "/wrong.key", kCardKeyHex);
    CHECK(run_cli("issue-cards --registry " + dir + "/reg.bin --registry-key-file " + dir +
                  "/wrong.key --card-key-file " + dir + "/card.key --out " + dir + "/x.json")
              .rc == 1);
}

TEST_CASE("run executes a scenario and exits by invariant status") {
    std::string dir = test_dir("cli_run");
    write_text(dir + "/scenario.json", mini_scenario());
    CmdResult r = run_cli("run --scenario " + dir + "/scenario.json --out " + dir + "/out");
    CHECK(r.rc == 0);
    CHECK(r.out.find("invariants: all ok") != std::string::npos);
    CHECK(read_file(dir + "/out/report.json").size() > 0);
    CHECK(read_file(dir + "/out/archive.bin").size() > 0);

    write_text(dir + "/bad.json", "{not json");
    CHECK(run_cli("run --scenario " + dir + "/bad.json --out " + dir + "/out2").rc == 2);
    CHECK(run_cli("run --scenario " + dir + "/missing.json --out " + dir + "/out2").rc == 2);
}

TEST_CASE("verify-log distinguishes ok, torn, tampered, and inconsistent") {
    std::string dir = test_dir("cli_verify");
    write_text(dir + "/dev.key", kDevKeyHex);
    write_text(dir + "/scenario.json", mini_scenario());
    REQUIRE(run_cli("run --scenario " + dir + "/scenario.json --out " + dir + "/out").rc == 0);
    std::string log = dir + "/out/TERM0001.log";
    std::string journal = dir + "/out/TERM0001.journal";

    CmdResult ok = run_cli("verify-log --log " + log + " --journal " + journal + " --key-file " +
                           dir + "/dev.key");
    CHECK(ok.rc == 0);
    CHECK(ok.out.find("Ok") != std::string::npos);

    // A flipped body byte names the damaged sequence number.
    Bytes tampered = read_file(log);
    tampered[tampered.size() / 2] ^= 0x20;
    write_file(dir + "/tampered.log", tampered);
    CmdResult bad = run_cli("verify-log --log " + dir + "/tampered.log --journal " + journal +
                            " --key-file " + dir + "/dev.key");
    CHECK(bad.rc == 1);
    CHECK(bad.out.find("TamperedAt{") != std::string::npos);

    // A torn tail that destroys an already-acked entry contradicts the
    // journal: that is an integrity failure, not a crash artifact.
    Bytes torn = read_file(log);
    torn.resize(torn.size() - 13);
    write_file(dir + "/torn.log", torn);
    CmdResult t = run_cli("verify-log --log " + dir + "/torn.log --journal " + journal +
                          " --key-file " + dir + "/dev.key");
    CHECK(t.rc == 1);
    CHECK(t.out.find("JournalInconsistent") != std::string::npos);

    // A torn unsynced tail is a crash artifact and verifies with a note.
    {
        WormLog wl = WormLog::open(dir + "/fresh.log", device_id_from_string("TERM0001"),
                                   crypto::Aes128Key::from_hex(kDevKeyHex), OpenMode::Append);
        wl.append(100, crypto::Iv128{}, Bytes(16, 0x11));
        wl.append(200, crypto::Iv128{}, Bytes(16, 0x22));
        SyncJournal::open(dir + "/fresh.journal", OpenMode::Append);
    }
    Bytes fresh = read_file(dir + "/fresh.log");
    fresh.resize(fresh.size() - 13);
    write_file(dir + "/fresh.log", fresh);
    CmdResult ft = run_cli("verify-log --log " + dir + "/fresh.log --journal " + dir +
                           "/fresh.journal --key-file " + dir + "/dev.key");
    CHECK(ft.rc == 0);
    CHECK(ft.out.find("torn tail") != std::string::npos);

    // A journal claiming more acks than the log holds is an integrity failure.
    {
        WormLog wl = WormLog::open(dir + "/small.log", device_id_from_string("TERM0001"),
                                   crypto::Aes128Key::from_hex(kDevKeyHex), OpenMode::Append);
        wl.append(100, crypto::Iv128{}, Bytes(16, 0x11));
        SyncJournal j = SyncJournal::open(dir + "/over.journal", OpenMode::Append);
        j.record(0, 0, 1, 200);
    }
    CmdResult over = run_cli("verify-log --log " + dir + "/small.log --journal " + dir +
                             "/over.journal --key-file " + dir + "/dev.key");
    CHECK(over.rc == 1);
    CHECK(over.out.find("JournalInconsistent") != std::string::npos);

    CHECK(run_cli("verify-log --log " + log + " --journal " + dir +
                  "/missing.journal --key-file " + dir + "/dev.key")
              .rc == 2);
}

TEST_CASE("report tallies an archive and matches the run report") {
    std::string dir = test_dir("cli_report");
    write_text(dir + "/vote.key", kVoteKeyHex);
    write_text(dir + "/ballot.json", R"([{"id":1,"name":"Alpha"},{"id":2,"name":"Beta"}])");
    write_text(dir + "/scenario.json", mini_scenario());
    REQUIRE(run_cli("run --scenario " + dir + "/scenario.json --out " + dir + "/out").rc == 0);

    CmdResult r = run_cli("report --archive " + dir + "/out/archive.bin --vote-key-file " + dir +
                          "/vote.key --ballot " + dir + "/ballot.json");
    REQUIRE(r.rc == 0);
    json cli = json::parse(r.out.substr(r.out.find('{')));
    json run_report = json::parse(read_file(dir + "/out/report.json"));
    CHECK(cli["counts"] == run_report["tally"]["counts"]);
    CHECK(cli["exclusions"].empty());

    // Empty archive: a bare header tallies to zero.
    write_file(dir + "/empty.bin", Bytes{'B', 'V', 'A', '1'});
    CmdResult empty = run_cli("report --archive " + dir + "/empty.bin --vote-key-file " + dir +
                              "/vote.key --ballot " + dir + "/ballot.json");
    CHECK(empty.rc == 0);
    json ecli = json::parse(empty.out.substr(empty.out.find('{')));
    CHECK(ecli["counts"]["1"] == 0);
    CHECK(ecli["counts"]["2"] == 0);

    // Structural damage is an integrity failure; a missing file is usage.
    Bytes broken = read_file(dir + "/out/archive.bin");
    broken.resize(broken.size() - 3);
    write_file(dir + "/broken.bin", broken);
    CHECK(run_cli("report --archive " + dir + "/broken.bin --vote-key-file " + dir +
                  "/vote.key --ballot " + dir + "/ballot.json")
              .rc == 1);
    CHECK(run_cli("report --archive " + dir + "/absent.bin --vote-key-file " + dir +
                  "/vote.key --ballot " + dir + "/ballot.json")
              .rc == 2);
}

TEST_CASE("usage errors and help follow the exit-code contract") {
    CHECK(run_cli("").rc == 2);
    CHECK(run_cli("bogus-subcommand").rc == 2);
    CHECK(run_cli("--help").rc == 0);
    CHECK(run_cli("run --scenario only").rc == 2);  // missing required --out
}
