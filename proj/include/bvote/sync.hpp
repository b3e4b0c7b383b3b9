#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "bvote/transport.hpp"
#include "bvote/wormlog.hpp"

namespace bvote {

/// Contiguous run of log entries prepared for upload.
struct BatchManifest {
    DeviceId device_id{};
    uint32_t batch_id = 0;  // dense per device, 0-based; the idempotency key
    std::vector<LogEntry> entries;
    crypto::Digest256 checksum;  // over device_id || batch_id || entry bodies
};

crypto::Digest256 manifest_checksum(const DeviceId& device_id, uint32_t batch_id,
                                    const std::vector<LogEntry>& entries);

/// Greedy fill: all batches full except possibly the last; ids dense from
/// next_batch_id. Throws ContractError on non-contiguous input.
std::vector<BatchManifest> build_batches(const std::vector<LogEntry>& unsynced,
                                         const DeviceId& device_id, uint32_t next_batch_id,
                                         uint32_t batch_size);

/// Wire frame: "BVM1" || device_id(8) || batch_id:u32 || count:u16 || entry
/// bodies (log record layout minus record_len) || checksum(32).
Bytes serialize_manifest(const BatchManifest& manifest);

/// Structural parse only; the checksum field is carried, not validated.
/// Throws MalformedPacket.
BatchManifest parse_manifest(std::span<const uint8_t> frame);

enum class NackReason : uint8_t { ChecksumMismatch, ChainBreak, MalformedManifest };

struct Ack {
    uint32_t batch_id;
};
struct AckDuplicate {
    uint32_t batch_id;
};
struct Nack {
    NackReason reason;
    uint32_t batch_id;
};
struct TransportDown {};
using UploadOutcome = std::variant<Ack, AckDuplicate, Nack, TransportDown>;

/// Response frame: one byte {0=Ack, 1=AckDuplicate, 2=NackChecksum,
/// 3=NackChain, 4=NackMalformed} || batch_id:u32. TransportDown is the
/// absence of a response and is never encoded.
Bytes encode_response(const UploadOutcome& outcome);
UploadOutcome decode_response(std::span<const uint8_t> frame);  // throws MalformedPacket

struct UploadResult {
    UploadOutcome outcome;
    uint64_t completed_at = 0;  // transmission end plus any injected delay
};

/// One manifest over the link. The frame arrives at send_at + transmit_ms
/// (plus injected delay); an unusable or missing reply is TransportDown.
UploadResult upload_timed(Transport& transport, const BatchManifest& manifest, uint64_t send_at,
                          uint64_t transmit_ms);
UploadOutcome upload(Transport& transport, const BatchManifest& manifest, uint64_t send_at,
                     uint64_t transmit_ms);

struct SyncConfig {
    uint32_t batch_size = 20;
    uint64_t batch_transmit_ms = 4800;  // per-batch transmission time
    int max_retries_per_batch = 8;      // rebuild-and-resend budget per cycle
};

struct SyncReport {
    uint32_t batches_sent = 0;
    uint32_t acked = 0;
    uint32_t nacked = 0;
    uint64_t duration_ms = 0;
    bool completed = false;  // every unsynced entry acknowledged this cycle
};

/// One synchronization cycle at simulated time `now`: probe, build batches
/// from the unsynced tail, upload in order, journal each Ack/AckDuplicate.
/// Stops at the first transport loss or unrecoverable Nack; un-acked batches
/// retry with the same batch_id next cycle.
SyncReport sync_cycle(const WormLog& log, SyncJournal& journal, Transport& transport,
                      const SyncConfig& config, uint64_t now);

/// Telemetry frame: "BVT1" || device_id(8) || auth_success:u32 ||
/// auth_failure:u32 || committed:u32 || cycle_count:u32 || cycle_total_ms:u64.
/// Cumulative counters; the server folds them with component-wise max, so
/// loss or duplication of telemetry never corrupts metrics.
struct TelemetryCounters {
    uint32_t auth_success = 0;
    uint32_t auth_failure = 0;
    uint32_t committed = 0;
    uint32_t cycle_count = 0;
    uint64_t cycle_total_ms = 0;
};

Bytes serialize_telemetry(const DeviceId& device_id, const TelemetryCounters& counters);
/// Returns device_id + counters. Throws MalformedPacket.
std::pair<DeviceId, TelemetryCounters> parse_telemetry(std::span<const uint8_t> frame);

}  // namespace bvote
