#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bvote/sync.hpp"
#include "bvote/vote_packet.hpp"
#include "bvote/wormlog.hpp"

namespace bvote {

enum class AnomalyKind : uint8_t {
    DuplicateUidAcrossDevices,
    ChecksumFailure,
    ChainBreak,
    ReplayedBatch,
    TimestampRegression,
};
const char* to_string(AnomalyKind kind);

struct Anomaly {
    AnomalyKind kind;
    std::string device;   // printable device id
    uint32_t batch_id = 0;
    uint32_t seq_no = 0;
    std::string uid_hex;  // set for duplicate-uid findings
    uint64_t detected_at = 0;
    std::string detail;
    bool operator==(const Anomaly&) const = default;
};

enum class ExclusionReason : uint8_t {
    PaddingError,
    MalformedPacket,
    UnknownCandidate,
    DuplicateUid,
};
const char* to_string(ExclusionReason reason);

struct Exclusion {
    ExclusionReason reason;
    std::string device;
    uint32_t seq_no = 0;
    bool operator==(const Exclusion&) const = default;
};

struct TallyResult {
    std::map<uint16_t, uint64_t> counts;  // zero-filled over the ballot
    std::vector<Exclusion> excluded;
};

/// Decrypt + parse entries in the given order; undecodable entries and
/// repeated UIDs become exclusions, never errors. First accepted vote per
/// UID wins.
TallyResult tally_entries(std::span<const LogEntry> entries, const crypto::Aes128Key& vote_key,
                          const Ballot& ballot);

struct MonitoringSnapshot {
    uint64_t turnout = 0;        // committed votes reported by terminals
    uint64_t auth_success = 0;
    uint64_t auth_failure = 0;
    uint64_t votes_received = 0;  // entries accepted server-side
    uint64_t cycle_count = 0;
    uint64_t cycle_total_ms = 0;
    double avg_cycle_ms = 0.0;
    std::map<std::string, uint64_t> last_sync_at;  // device -> ms, 0 = never
    std::vector<Anomaly> anomalies;
};

/// Central ingest, verification, tally, and monitoring. Per-device ingestion
/// is serialized; state mutates only on an Ack.
class Server {
public:
    Server(crypto::Aes128Key vote_key, Ballot ballot);

    void register_device(const DeviceId& device_id, const crypto::Aes128Key& device_key);

    /// Dispatches a wire frame (manifest or telemetry) and returns the
    /// response bytes; empty response for telemetry.
    Bytes handle_frame(uint64_t now, std::span<const uint8_t> frame);

    /// Verifies the manifest checksum then every entry's hash, mac, bitwise
    /// agreement with already-accepted overlap, and chain continuity. New
    /// entries are accepted atomically. Known (device, batch) pairs with the
    /// identical checksum are absorbed as AckDuplicate without re-validation.
    UploadOutcome ingest(uint64_t now, std::span<const uint8_t> manifest_bytes);

    void ingest_telemetry(uint64_t now, std::span<const uint8_t> frame);

    /// Decrypt + parse every accepted entry in acceptance order. Undecodable
    /// entries and repeated UIDs become exclusions, never errors.
    TallyResult tally() const;

    /// Accumulated ingest-time anomalies plus a fresh scan for cross-device
    /// duplicate UIDs and per-device timestamp regressions. Idempotent.
    const std::vector<Anomaly>& detect_anomalies(uint64_t now);

    MonitoringSnapshot snapshot() const;

    /// Accepted entries in acceptance order.
    const std::vector<LogEntry>& accepted() const { return accepted_order_; }
    uint64_t accepted_count(const DeviceId& device_id) const;

    /// Archive file: "BVA1" then per accepted entry (acceptance order):
    /// device_id(8) || record_len:u32 || record body (log layout).
    Bytes archive() const;

private:
    struct DeviceState {
        crypto::Aes128Key key;
        std::vector<LogEntry> entries;           // dense by seq_no
        std::map<uint32_t, crypto::Digest256> batch_index;
        uint64_t last_sync_at = 0;
        TelemetryCounters telemetry;
    };

    DeviceState* find_device(const DeviceId& id);
    void add_anomaly(Anomaly a);

    crypto::Aes128Key vote_key_;
    Ballot ballot_;
    std::map<DeviceId, DeviceState> devices_;
    std::vector<LogEntry> accepted_order_;
    std::vector<Anomaly> anomalies_;
    std::set<std::string> anomaly_keys_;  // dedup across ingests and scans
};

/// Parses an archive produced by Server::archive, re-verifying each entry's
/// hash linkage (keyless checks only). Throws MalformedPacket on structural
/// damage, TamperedError when a hash fails to recompute.
std::vector<LogEntry> load_archive(std::span<const uint8_t> data);

}  // namespace bvote
