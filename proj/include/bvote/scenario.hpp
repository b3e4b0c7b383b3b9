#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bvote/cardauth.hpp"
#include "bvote/simnet.hpp"
#include "bvote/sync.hpp"
#include "bvote/terminal.hpp"
#include "bvote/vote_packet.hpp"

namespace bvote {

/// A registered voter's planned visit. `revisit_ms`, when set, presents the
/// same card a second time (expected: Access Denied).
struct VoterPlan {
    Uid uid;
    uint16_t candidate_id = 0;
    uint64_t arrival_ms = 0;
    std::string device;
    std::optional<uint64_t> revisit_ms;
};

/// Crafted bad cards. BadToken inverts a genuine token's bytes; UnknownUid
/// carries a well-formed token for a UID missing from the registry;
/// AlteredUid pairs a presented UID with a token issued for `source_uid`.
enum class ForgeryKind { BadToken, UnknownUid, AlteredUid };

struct ForgedPlan {
    ForgeryKind kind = ForgeryKind::BadToken;
    Uid uid;  // presented UID
    std::optional<Uid> source_uid;
    uint64_t arrival_ms = 0;
    std::string device;
};

/// Bitwise copy of a registered voter's card presented at another kiosk.
struct ClonePlan {
    Uid uid;
    uint16_t candidate_id = 0;
    uint64_t arrival_ms = 0;
    std::string device;
};

struct ScenarioConfig {
    uint64_t seed = 0;
    uint32_t batch_size = 20;
    uint64_t sync_interval_ms = 30000;
    std::optional<uint64_t> close_ms;  // default: last arrival + 14500

    crypto::Aes128Key card_key{};
    crypto::Aes128Key vote_key{};
    crypto::Aes128Key registry_key{};
    std::map<std::string, crypto::Aes128Key> device_keys;

    Ballot ballot;
    std::vector<std::string> devices;  // kiosk names, 8 printable chars each

    TerminalConfig terminal;
    uint64_t batch_transmit_ms = 4800;
    int max_retries_per_batch = 8;

    std::vector<VoterPlan> voters;
    std::vector<ForgedPlan> forged;
    std::vector<ClonePlan> clones;

    LinkSchedule link;
    FaultPlan faults;
};

/// Throws ConfigError on any structural or semantic problem.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario_file(const std::string& path);
void validate_scenario(const ScenarioConfig& config);

/// The tally an honest count must produce: one vote per registered voter for
/// their intended candidate. Revisits, forged cards, and clone copies
/// contribute nothing.
std::map<uint16_t, uint64_t> intended_tally(const ScenarioConfig& config);

/// Latest planned presentation time across voters, revisits, forgeries, and
/// clones; 0 when the scenario is empty.
uint64_t last_arrival_ms(const ScenarioConfig& config);

struct RunResult {
    nlohmann::json report;
    std::vector<WireFrame> trace;  // everything an on-path observer captured
    Bytes archive;
};

/// Executes the scenario. `workdir` receives per-device logs and journals
/// plus report.json, report.txt, and archive.bin. Deterministic: the same
/// config yields byte-identical artifacts (no absolute paths inside any).
RunResult run_scenario(const ScenarioConfig& config, const std::string& workdir);

/// Runs the scenario twice in the two directories and compares every
/// artifact byte for byte.
bool replay_check(const ScenarioConfig& config, const std::string& workdir_a,
                  const std::string& workdir_b);

std::string report_text(const nlohmann::json& report);

}  // namespace bvote
