#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bvote/cardauth.hpp"
#include "bvote/rng.hpp"
#include "bvote/vote_packet.hpp"
#include "bvote/wormlog.hpp"

namespace bvote {

/// Simulated duration of each phase of a voting session. The defaults sum to
/// the reference 11,500 ms cycle.
struct StepDurations {
    uint64_t card_read_ms = 100;
    uint64_t auth_ms = 200;
    uint64_t selection_ms = 7000;     // voter picks a candidate
    uint64_t confirmation_ms = 4100;  // voter confirms the choice
    uint64_t encryption_ms = 50;
    uint64_t append_ms = 50;

    uint64_t total() const {
        return card_read_ms + auth_ms + selection_ms + confirmation_ms + encryption_ms + append_ms;
    }
};

struct TerminalConfig {
    StepDurations steps;
    uint64_t session_timeout_ms = 60000;  // from authentication; abandoned after
    uint64_t result_dwell_ms = 2000;      // Denied/Committed display hold
};

// Session states. Times are simulated ms.
struct Idle {
    bool operator==(const Idle&) const = default;
};
struct AwaitingSelection {
    Uid uid;
    uint64_t cycle_start;        // CardPresented receipt
    uint64_t authenticated_at;   // cycle_start + card read + auth
    bool operator==(const AwaitingSelection&) const = default;
};
struct AwaitingConfirmation {
    Uid uid;
    uint16_t candidate_id;
    uint64_t cycle_start;
    uint64_t authenticated_at;
    bool operator==(const AwaitingConfirmation&) const = default;
};
struct Denied {
    AuthResult reason;
    uint64_t until;
    bool operator==(const Denied&) const = default;
};
struct Committed {
    Uid uid;
    uint64_t until;
    bool operator==(const Committed&) const = default;
};
using SessionState = std::variant<Idle, AwaitingSelection, AwaitingConfirmation, Denied, Committed>;

// Events, applied strictly in clock order. The receipt time accompanies every
// event as the `now` argument of handle_event.
struct CardPresented {
    CardImage card;
};
struct SelectCandidate {
    size_t index;  // position on the ballot
};
struct Confirm {};
struct Cancel {};
struct Tick {};
using TerminalEvent = std::variant<CardPresented, SelectCandidate, Confirm, Cancel, Tick>;

// Effect intents returned by the pure transition function; the Terminal
// driver executes them (encrypt + append, registry update, metrics).
struct Display {
    uint64_t at;  // simulated ms the message appears
    std::string message;
    bool operator==(const Display&) const = default;
};
struct AppendEntry {
    uint64_t at;  // append completion
    Uid uid;
    Bytes packet;  // plaintext vote packet
    bool operator==(const AppendEntry&) const = default;
};
struct MarkVoted {
    uint64_t at;
    Uid uid;
    bool operator==(const MarkVoted&) const = default;
};
struct RecordCycle {
    uint64_t at;
    uint64_t duration_ms;  // commit completion minus CardPresented receipt
    bool operator==(const RecordCycle&) const = default;
};
using Effect = std::variant<Display, AppendEntry, MarkVoted, RecordCycle>;

inline constexpr const char* kMsgAuthenticated = "Voter Authenticated";
inline constexpr const char* kMsgRecorded = "Vote Recorded";
inline constexpr const char* kMsgDenied = "Access Denied";

struct TerminalCtx {
    const VoterRegistry& registry;
    const Ballot& ballot;
    const crypto::Aes128Key& card_key;
    const TerminalConfig& config;
};

struct StepResult {
    SessionState state;
    std::vector<Effect> effects;
};

/// Pure transition function: no I/O, no mutation. `now` is the simulated
/// receipt time of the event. Unexpected events leave the state unchanged
/// with no effects.
StepResult handle_event(const SessionState& state, const TerminalEvent& event, uint64_t now,
                        const TerminalCtx& ctx);

struct TerminalMetrics {
    uint32_t auth_success = 0;
    uint32_t auth_failure = 0;
    uint32_t committed = 0;
    uint32_t cycle_count = 0;
    uint64_t cycle_total_ms = 0;
    uint64_t max_cycle_ms = 0;
};

/// Owns one kiosk's registry copy, log handle, and session state, and
/// executes effect intents. Single-threaded by contract.
class Terminal {
public:
    Terminal(TerminalConfig config, VoterRegistry registry, Ballot ballot,
             crypto::Aes128Key card_key, crypto::Aes128Key vote_key, WormLog& log,
             DeterministicRng iv_rng);

    /// Applies one event and executes the resulting effects in order. On a
    /// log append failure the state reverts to AwaitingConfirmation, no
    /// effect is executed, and the StorageError propagates: the vote is
    /// neither lost nor double-counted.
    std::vector<Effect> on_event(uint64_t now, const TerminalEvent& event);

    const SessionState& state() const { return state_; }
    const TerminalMetrics& metrics() const { return metrics_; }
    const VoterRegistry& registry() const { return registry_; }
    WormLog& log() { return *log_; }

private:
    TerminalConfig config_;
    VoterRegistry registry_;
    Ballot ballot_;
    crypto::Aes128Key card_key_;
    crypto::Aes128Key vote_key_;
    WormLog* log_;
    DeterministicRng iv_rng_;
    SessionState state_ = Idle{};
    TerminalMetrics metrics_;
};

}  // namespace bvote
