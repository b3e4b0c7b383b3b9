#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "bvote/rng.hpp"
#include "bvote/server.hpp"
#include "bvote/transport.hpp"

namespace bvote {

/// Discrete-event simulated clock. Events fire in (time, insertion order),
/// so identically-built schedules replay identically.
class SimClock {
public:
    uint64_t now() const { return now_; }

    /// Throws ContractError when `at` is in the past.
    void schedule(uint64_t at, std::function<void()> fn);

    /// Fires the earliest pending event; false when none remain.
    bool run_next();
    void run_until_empty();

private:
    struct Pending {
        uint64_t at;
        uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    uint64_t now_ = 0;
    uint64_t next_seq_ = 0;
    std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
};

/// Scheduled link availability. Half-open windows [from_ms, to_ms) override
/// the default state; the manual override forces Up unconditionally.
struct LinkWindow {
    uint64_t from_ms = 0;
    uint64_t to_ms = 0;
    bool up = false;
};

struct LinkSchedule {
    std::vector<LinkWindow> windows;  // non-overlapping, ascending
    bool default_up = true;
    bool manual_override = false;

    bool is_up(uint64_t now) const;
    /// Earliest instant >= from when the link is up; nullopt if never.
    std::optional<uint64_t> first_up_at(uint64_t from) const;
};

/// Throws ConfigError when windows overlap or are out of order.
void validate_link_schedule(const LinkSchedule& schedule);

/// One-shot byte corruption: fires on the first eligible frame sent at or
/// after at_ms, flipping the byte at byte_offset % frame length.
struct CorruptionEvent {
    uint64_t at_ms = 0;
    uint64_t byte_offset = 0;
};

struct FaultPlan {
    double drop_probability = 0.0;  // per message, each direction
    uint64_t delay_min_ms = 0;      // uniform extra reply latency
    uint64_t delay_max_ms = 0;
    std::vector<CorruptionEvent> corruptions;
};

struct SendOutcome {
    enum Kind { Delivered, Dropped, LinkDown } kind = Delivered;
    Bytes bytes;        // post-corruption frame (Delivered only)
    uint64_t at_ms = 0; // delivery time
};

/// One direction over the link: availability check, drop roll, delay draw,
/// scheduled corruption. `used` tracks which one-shot corruptions fired and
/// must persist across calls; corruption applies only when corrupt=true
/// (request direction).
SendOutcome transport_send(const LinkSchedule& schedule, const FaultPlan& plan,
                           std::vector<bool>& used, DeterministicRng& rng, uint64_t now,
                           std::span<const uint8_t> bytes, bool corrupt);

/// Everything an on-path observer sees: every frame that left a sender, with
/// its on-wire (post-corruption) bytes.
struct WireFrame {
    uint64_t at = 0;
    bool request = false;   // device->server when true
    bool delivered = false; // reached the other end
    Bytes bytes;
    bool operator==(const WireFrame&) const = default;
};

/// Transport backed by the link schedule, fault plan, and in-process server.
/// Shared by every device in a scenario; the one-shot corruption budget and
/// the fault rng are global so multi-device runs stay deterministic.
class SimTransport : public Transport {
public:
    SimTransport(LinkSchedule schedule, FaultPlan plan, Server& server, DeterministicRng rng);

    bool is_up(uint64_t now) override;
    ExchangeResult exchange(uint64_t at, std::span<const uint8_t> frame) override;

    const std::vector<WireFrame>& trace() const { return trace_; }
    const LinkSchedule& schedule() const { return schedule_; }

private:
    LinkSchedule schedule_;
    FaultPlan plan_;
    Server* server_;
    DeterministicRng rng_;
    std::vector<bool> corruption_used_;
    std::vector<WireFrame> trace_;
};

}  // namespace bvote
