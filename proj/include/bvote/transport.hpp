#pragma once

#include <cstdint>
#include <optional>

#include "bvote/bytes.hpp"

namespace bvote {

struct ExchangeResult {
    std::optional<Bytes> reply;  // nullopt: request or reply lost in flight
    uint64_t delay_ms = 0;       // extra link latency beyond transmission time
};

/// Request/response link between a device and the central server. The
/// simulated implementation injects outages, drops, delays, and corruption.
class Transport {
public:
    virtual ~Transport() = default;

    /// Link state at the given simulated time; consumes no randomness.
    virtual bool is_up(uint64_t now) = 0;

    /// Transmits one request frame arriving at `at`; returns the reply (if
    /// any) plus the extra delay before the sender holds it.
    virtual ExchangeResult exchange(uint64_t at, std::span<const uint8_t> frame) = 0;
};

enum class LinkState : uint8_t { Up, Down };

inline LinkState probe(Transport& transport, uint64_t now) {
    return transport.is_up(now) ? LinkState::Up : LinkState::Down;
}

}  // namespace bvote
