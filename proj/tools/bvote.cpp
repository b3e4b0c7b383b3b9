// bvote: operator entry point for the RFID voting simulator. Generates voter
// registries and card images, runs scenario files, verifies logs offline and
// tallies archives. Exit codes: 0 success, 1 integrity/invariant failure,
// 2 usage or input error.
#include <cctype>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bvote/bytes.hpp"
#include "bvote/cardauth.hpp"
#include "bvote/errors.hpp"
#include "bvote/rng.hpp"
#include "bvote/scenario.hpp"
#include "bvote/server.hpp"
#include "bvote/wormlog.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bvote;

namespace {

constexpr int kOk = 0;
constexpr int kIntegrityFailure = 1;
constexpr int kUsageError = 2;

/// Key files hold 32 hex characters (16 bytes); surrounding whitespace is
/// tolerated so `xxd -p` output works as-is.
crypto::Aes128Key load_key_file(const std::string& path) {
    Bytes raw = read_file(path);
    std::string hex;
    for (uint8_t b : raw)
        if (!std::isspace(b)) hex.push_back(static_cast<char>(b));
    try {
        if (hex.size() != 2 * crypto::kBlockSize)
            throw ConfigError("key file must hold 32 hex characters: " + path);
        return crypto::Aes128Key::from_hex(hex);
    } catch (const std::invalid_argument&) {
        throw ConfigError("key file is not valid hex: " + path);
    }
}

int cmd_gen_registry(uint32_t count, uint64_t seed, const std::string& out_path,
                     const std::string& key_file) {
    crypto::Aes128Key key = load_key_file(key_file);
    DeterministicRng rng(seed);

    // Seeded-random uids across the ISO 14443 single/double/triple sizes.
    std::set<Uid> unique;
    std::vector<Uid> uids;
    static constexpr uint8_t kSizes[3] = {4, 7, 10};
    while (uids.size() < count) {
        Bytes b(kSizes[rng.uniform(0, 2)]);
        for (uint8_t& byte : b) byte = static_cast<uint8_t>(rng.uniform(0, 255));
        Uid uid{std::move(b)};
        if (unique.insert(uid).second) uids.push_back(std::move(uid));
    }

    crypto::Iv128 iv{};
    for (uint8_t& byte : iv.bytes) byte = static_cast<uint8_t>(rng.uniform(0, 255));

    VoterRegistry registry = create_registry(uids, key);
    write_file(out_path, save_registry(registry, key, iv));
    std::cout << "wrote registry with " << count << " voters to " << out_path << "\n";
    return kOk;
}

int cmd_issue_cards(const std::string& registry_path, const std::string& registry_key_file,
                    const std::string& card_key_file, const std::string& out_path) {
    crypto::Aes128Key registry_key = load_key_file(registry_key_file);
    crypto::Aes128Key card_key = load_key_file(card_key_file);
    VoterRegistry registry = load_registry(read_file(registry_path), registry_key);

    json cards = json::array();
    for (const auto& [uid, record] : registry.entries) {
        CardImage card = issue_card(uid, card_key);
        cards.push_back({{"uid", uid.to_hex()}, {"token", to_hex(card.token)}});
    }
    json doc{{"cards", cards}};
    std::string text = doc.dump(2) + "\n";
    write_file(out_path, Bytes(text.begin(), text.end()));
    std::cout << "issued " << cards.size() << " cards to " << out_path << "\n";
    return kOk;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
    ScenarioConfig config = load_scenario_file(scenario_path);
    fs::create_directories(out_dir);
    RunResult result = run_scenario(config, out_dir);
    std::cout << report_text(result.report);

    for (const auto& [name, ok] : result.report["invariants"].items())
        if (!ok.get<bool>()) {
            std::cout << "invariant violated: " << name << "\n";
            return kIntegrityFailure;
        }
    return kOk;
}

int cmd_verify_log(const std::string& log_path, const std::string& journal_path,
                   const std::string& key_file) {
    crypto::Aes128Key key = load_key_file(key_file);
    Bytes log_bytes = read_file(log_path);      // missing file -> usage error
    Bytes journal_bytes = read_file(journal_path);

    VerifyReport report;
    try {
        report = verify_log_bytes(log_bytes, key);
    } catch (const StorageError&) {
        std::cout << "TamperedAt{0} (log header unreadable)\n";
        return kIntegrityFailure;
    }
    if (!report.ok) {
        std::cout << "TamperedAt{" << report.tampered_seq.value_or(0) << "}\n";
        return kIntegrityFailure;
    }

    // Journal consistency: the acked ranges must be dense, well formed, and
    // covered by the verified log.
    SyncJournal journal = SyncJournal::open(journal_path, OpenMode::ReadOnly);
    if (std::optional<uint32_t> head = journal.acked_head(); head && *head >= report.entries) {
        std::cout << "JournalInconsistent{acked " << *head << ", log has " << report.entries
                  << " entries}\n";
        return kIntegrityFailure;
    }

    std::cout << "Ok";
    if (report.torn_tail) std::cout << " (torn tail after " << report.entries << " entries)";
    std::cout << "\n";
    return kOk;
}

Ballot load_ballot_file(const std::string& path) {
    Bytes raw = read_file(path);
    Ballot ballot;
    try {
        json doc = json::parse(raw.begin(), raw.end());
        for (const json& c : doc)
            ballot.candidates.push_back(
                {c.at("id").get<uint16_t>(), c.at("name").get<std::string>()});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("ballot file: ") + e.what());
    }
    validate_ballot(ballot);
    return ballot;
}

int cmd_report(const std::string& archive_path, const std::string& vote_key_file,
               const std::string& ballot_path) {
    crypto::Aes128Key vote_key = load_key_file(vote_key_file);
    Ballot ballot = load_ballot_file(ballot_path);
    std::vector<LogEntry> entries = load_archive(read_file(archive_path));
    TallyResult tally = tally_entries(entries, vote_key, ballot);

    // Cross-device duplicates, recomputable from the archive alone.
    json anomalies = json::array();
    std::map<Bytes, DeviceId> first_device;
    for (const LogEntry& e : entries) {
        std::optional<VotePacket> packet;
        try {
            packet = parse_vote_packet(crypto::decrypt_packet(vote_key, e.iv, e.ciphertext));
        } catch (const CryptoError&) {
            continue;  // already surfaced as a tally exclusion
        } catch (const MalformedPacket&) {
            continue;
        }
        auto [it, fresh] = first_device.emplace(packet->uid.bytes(), e.device_id);
        if (!fresh && it->second != e.device_id)
            anomalies.push_back({{"kind", "DuplicateUidAcrossDevices"},
                                 {"uid", packet->uid.to_hex()},
                                 {"device", device_id_to_string(e.device_id)},
                                 {"seq_no", e.seq_no}});
    }

    std::cout << "tally (" << entries.size() << " archived entries)\n";
    for (const Candidate& c : ballot.candidates)
        std::cout << "  " << c.name << " (" << c.id << "): " << tally.counts.at(c.id) << "\n";
    std::cout << "exclusions: " << tally.excluded.size() << "\n";
    for (const Exclusion& x : tally.excluded)
        std::cout << "  " << x.device << " seq " << x.seq_no << ": " << to_string(x.reason)
                  << "\n";
    std::cout << "anomalies: " << anomalies.size() << "\n";
    for (const json& a : anomalies)
        std::cout << "  " << a["device"].get<std::string>() << " seq " << a["seq_no"]
                  << ": " << a["kind"].get<std::string>() << " uid " << a["uid"].get<std::string>()
                  << "\n";

    json counts;
    for (const auto& [id, n] : tally.counts) counts[std::to_string(id)] = n;
    json exclusions = json::array();
    for (const Exclusion& x : tally.excluded)
        exclusions.push_back(
            {{"reason", to_string(x.reason)}, {"device", x.device}, {"seq_no", x.seq_no}});
    json doc{{"entries", entries.size()},
             {"counts", counts},
             {"exclusions", exclusions},
             {"anomalies", anomalies}};
    std::cout << doc.dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RFID voting system simulator"};
    app.require_subcommand(1);

    uint32_t count = 0;
    uint64_t seed = 0;
    std::string out_path, key_file, registry_path, registry_key_file, card_key_file;
    std::string scenario_path, out_dir, log_path, journal_path, archive_path, ballot_path;
    std::string vote_key_file;

    CLI::App* gen = app.add_subcommand("gen-registry", "Generate a seeded voter registry");
    gen->add_option("--count", count, "Number of voters")->required();
    gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", out_path, "Output registry path")->required();
    gen->add_option("--key-file", key_file, "Registry key file (32 hex chars)")->required();

    CLI::App* issue = app.add_subcommand("issue-cards", "Issue card images for a registry");
    issue->add_option("--registry", registry_path, "Registry file")->required();
    issue->add_option("--registry-key-file", registry_key_file, "Registry key file")->required();
    issue->add_option("--card-key-file", card_key_file, "Card issuing key file")->required();
    issue->add_option("--out", out_path, "Output JSON path")->required();

    CLI::App* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--out", out_dir, "Output directory for logs and reports")->required();

    CLI::App* verify = app.add_subcommand("verify-log", "Verify a device log and its journal");
    verify->add_option("--log", log_path, "Log file")->required();
    verify->add_option("--journal", journal_path, "Sync journal file")->required();
    verify->add_option("--key-file", key_file, "Device key file")->required();

    CLI::App* report = app.add_subcommand("report", "Tally a server archive");
    report->add_option("--archive", archive_path, "Archive file")->required();
    report->add_option("--vote-key-file", vote_key_file, "Vote key file")->required();
    report->add_option("--ballot", ballot_path, "Ballot JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsageError;
    }

    try {
        if (*gen) return cmd_gen_registry(count, seed, out_path, key_file);
        if (*issue) return cmd_issue_cards(registry_path, registry_key_file, card_key_file,
                                           out_path);
        if (*run) return cmd_run(scenario_path, out_dir);
        if (*verify) return cmd_verify_log(log_path, journal_path, key_file);
        if (*report) return cmd_report(archive_path, vote_key_file, ballot_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const StorageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const TamperedError& e) {
        std::cerr << "integrity failure at seq " << e.seq_no << ": " << e.what() << "\n";
        return kIntegrityFailure;
    } catch (const JournalCorrupt& e) {
        std::cerr << "integrity failure: " << e.what() << "\n";
        return kIntegrityFailure;
    } catch (const MalformedPacket& e) {
        std::cerr << "integrity failure: " << e.what() << "\n";
        return kIntegrityFailure;
    } catch (const RegistryCorrupt& e) {
        std::cerr << "integrity failure: " << e.what() << "\n";
        return kIntegrityFailure;
    } catch (const CryptoError& e) {
        std::cerr << "integrity failure: " << e.what() << "\n";
        return kIntegrityFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}
