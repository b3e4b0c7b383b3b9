#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bvote/bytes.hpp"
#include "bvote/crypto.hpp"

namespace bvote {

using DeviceId = std::array<uint8_t, 8>;

/// Exactly 8 printable ASCII characters. Throws ContractError otherwise.
DeviceId device_id_from_string(const std::string& s);
std::string device_id_to_string(const DeviceId& id);

struct LogEntry {
    DeviceId device_id{};
    uint32_t seq_no = 0;      // dense, 0-based per device
    uint64_t timestamp = 0;   // simulated ms at append
    crypto::Iv128 iv;
    Bytes ciphertext;         // encrypted vote packet; positive multiple of 16
    crypto::Digest256 prev_hash;   // predecessor entry_hash; zeros at genesis
    crypto::Digest256 entry_hash;  // chain_hash(prev_hash, hash preimage)
    crypto::Digest256 mac;         // device_mac(device_key, entry_hash)
    bool operator==(const LogEntry&) const = default;
};

/// Bytes covered by the chain hash: device_id || seq_no || timestamp || iv ||
/// ct_len || ciphertext. Including the device id pins every header field.
Bytes entry_hash_preimage(const DeviceId& device_id, uint32_t seq_no, uint64_t timestamp,
                          const crypto::Iv128& iv, std::span<const uint8_t> ciphertext);

/// Builds a fully linked entry for the given predecessor hash.
LogEntry make_entry(const DeviceId& device_id, uint32_t seq_no, uint64_t timestamp,
                    const crypto::Iv128& iv, Bytes ciphertext, const crypto::Digest256& prev_hash,
                    const crypto::Aes128Key& device_key);

/// Record body (everything after record_len): seq_no:u32 || timestamp:u64 ||
/// iv(16) || ct_len:u16 || ciphertext || prev_hash(32) || entry_hash(32) ||
/// mac(32). Shared by the log file and the sync wire format.
void write_entry_body(ByteWriter& w, const LogEntry& entry);

/// Inverse of write_entry_body; device_id comes from the surrounding context.
/// Structural failures surface as std::out_of_range from the reader or
/// MalformedPacket for invalid ct_len.
LogEntry read_entry_body(ByteReader& r, const DeviceId& device_id);

/// True when the entry's hash, chain link, and mac all recompute.
bool entry_verifies(const LogEntry& entry, const crypto::Digest256& expected_prev,
                    const crypto::Aes128Key& device_key);

struct VerifyReport {
    bool ok = true;
    std::optional<uint32_t> tampered_seq;  // first failing position when !ok
    uint32_t entries = 0;                  // complete records verified
    bool torn_tail = false;                // file ends inside a consistent partial record
};

/// Full offline verification of a log file image: structure, hash chain, macs.
/// A consistent partial final record is reported as torn (crash artifact), any
/// other inconsistency as tampering. Throws StorageError when the header is
/// unreadable.
VerifyReport verify_log_bytes(std::span<const uint8_t> file, const crypto::Aes128Key& device_key);
VerifyReport verify_log_file(const std::string& path, const crypto::Aes128Key& device_key);

enum class OpenMode { ReadOnly, Append };

/// Append-only hash-chained vote log. File layout: "BVL1" || device_id(8),
/// then per record: record_len:u32 || body (see write_entry_body).
/// Records are never modified after append; open() re-verifies the whole
/// chain and refuses tampered files.
class WormLog {
public:
    /// Creates the file when absent (Append mode). Heals a torn final record
    /// (crash artifact) by truncation in Append mode; mid-log corruption
    /// throws TamperedError instead. ReadOnly never mutates the file.
    static WormLog open(const std::string& path, const DeviceId& device_id,
                        const crypto::Aes128Key& device_key, OpenMode mode);

    /// Persists (with flush) before returning the dense seq_no.
    /// Throws StorageError on write failure, leaving the log unchanged.
    uint32_t append(uint64_t timestamp, const crypto::Iv128& iv, Bytes ciphertext);

    const std::vector<LogEntry>& entries() const { return entries_; }
    const DeviceId& device_id() const { return device_id_; }
    uint32_t next_seq() const { return static_cast<uint32_t>(entries_.size()); }
    crypto::Digest256 head_hash() const;
    const std::string& path() const { return path_; }

    /// Test hook: the next n append calls fail with StorageError.
    void inject_append_failures(int n) { fail_appends_ = n; }

private:
    WormLog() = default;

    std::string path_;
    DeviceId device_id_{};
    crypto::Aes128Key device_key_;
    OpenMode mode_ = OpenMode::ReadOnly;
    std::vector<LogEntry> entries_;
    int fail_appends_ = 0;
};

struct SyncJournalEntry {
    uint32_t batch_id = 0;
    uint32_t first_seq = 0;
    uint32_t last_seq = 0;
    uint64_t acked_at = 0;
    bool operator==(const SyncJournalEntry&) const = default;
};

/// Append-only record of acknowledged batch ranges. File layout: "BVJ1" then
/// per record: batch_id:u32 || first_seq:u32 || last_seq:u32 || acked_at:u64
/// || checksum(preceding 20 bytes). Ranges are contiguous from 0 and batch
/// ids dense; violations throw JournalCorrupt.
class SyncJournal {
public:
    static SyncJournal open(const std::string& path, OpenMode mode);

    /// Durable append; a repeat of an already-journaled identical range is a
    /// no-op. Gaps, overlaps, or id mismatches throw JournalCorrupt.
    void record(uint32_t batch_id, uint32_t first_seq, uint32_t last_seq, uint64_t acked_at);

    /// Highest acknowledged seq_no, or nullopt when nothing is acked.
    std::optional<uint32_t> acked_head() const;
    uint32_t next_batch_id() const { return static_cast<uint32_t>(entries_.size()); }
    const std::vector<SyncJournalEntry>& entries() const { return entries_; }
    const std::string& path() const { return path_; }

private:
    SyncJournal() = default;

    std::string path_;
    OpenMode mode_ = OpenMode::ReadOnly;
    std::vector<SyncJournalEntry> entries_;
};

/// Entries not yet covered by the journal, in order. Throws JournalCorrupt
/// when the journal acknowledges more than the log holds.
std::vector<LogEntry> read_unsynced(const WormLog& log, const SyncJournal& journal);

}  // namespace bvote
