#include "bvote/wormlog.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>

#include "bvote/errors.hpp"

namespace bvote {

using crypto::Aes128Key;
using crypto::Digest256;
using crypto::Iv128;

namespace {

constexpr size_t kLogHeaderSize = 12;    // "BVL1" + device_id
constexpr size_t kFixedBodySize = 126;   // body size minus ciphertext
constexpr size_t kJournalRecordSize = 52;

void append_to_file(const std::string& path, std::span<const uint8_t> data) {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw StorageError("cannot open for append: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    f.flush();
    if (!f) throw StorageError("write failed: " + path);
}

struct ParsedLog {
    DeviceId device_id{};
    std::vector<LogEntry> entries;
    uint64_t committed_size = kLogHeaderSize;  // offset past the last complete record
    bool torn_tail = false;
    std::optional<uint32_t> structural_bad_seq;
};

// Structure-only pass: record framing and the record_len/ct_len cross-check.
// A partial final record whose declared lengths are consistent with the bytes
// present is a torn write; every other framing violation is tampering at the
// current position.
ParsedLog parse_log_structure(std::span<const uint8_t> file) {
    if (file.size() < kLogHeaderSize) throw StorageError("log header truncated");
    if (std::memcmp(file.data(), "BVL1", 4) != 0) throw StorageError("bad log magic");
    ParsedLog out;
    std::memcpy(out.device_id.data(), file.data() + 4, 8);

    size_t pos = kLogHeaderSize;
    while (pos < file.size()) {
        uint32_t seq = static_cast<uint32_t>(out.entries.size());
        size_t remaining = file.size() - pos;
        if (remaining < 34) {  // cannot even reach ct_len: unverifiable stub
            out.torn_tail = true;
            break;
        }
        ByteReader r(file.subspan(pos));
        uint32_t record_len = r.u32();
        ByteReader peek(file.subspan(pos + 32, 2));
        uint16_t ct_len = peek.u16();
        if (record_len != kFixedBodySize + ct_len || ct_len == 0 || ct_len % 16 != 0) {
            out.structural_bad_seq = seq;
            break;
        }
        if (remaining < 4 + static_cast<size_t>(record_len)) {
            out.torn_tail = true;
            break;
        }
        LogEntry e = read_entry_body(r, out.device_id);
        if (e.seq_no != seq) {
            out.structural_bad_seq = seq;
            break;
        }
        out.entries.push_back(std::move(e));
        pos += 4 + record_len;
        out.committed_size = pos;
    }
    return out;
}

Bytes serialize_journal_record(const SyncJournalEntry& e) {
    ByteWriter w;
    w.u32(e.batch_id);
    w.u32(e.first_seq);
    w.u32(e.last_seq);
    w.u64(e.acked_at);
    Digest256 sum = crypto::checksum(w.bytes());
    w.raw(sum.bytes);
    return w.take();
}

}  // namespace

DeviceId device_id_from_string(const std::string& s) {
    if (s.size() != 8) throw ContractError("device id must be exactly 8 characters");
    DeviceId id{};
    for (size_t i = 0; i < 8; ++i) {
        if (!std::isprint(static_cast<unsigned char>(s[i])))
            throw ContractError("device id must be printable ASCII");
        id[i] = static_cast<uint8_t>(s[i]);
    }
    return id;
}

std::string device_id_to_string(const DeviceId& id) {
    return std::string(reinterpret_cast<const char*>(id.data()), id.size());
}

Bytes entry_hash_preimage(const DeviceId& device_id, uint32_t seq_no, uint64_t timestamp,
                          const Iv128& iv, std::span<const uint8_t> ciphertext) {
    ByteWriter w;
    w.raw(device_id);
    w.u32(seq_no);
    w.u64(timestamp);
    w.raw(iv.bytes);
    w.u16(static_cast<uint16_t>(ciphertext.size()));
    w.raw(ciphertext);
    return w.take();
}

LogEntry make_entry(const DeviceId& device_id, uint32_t seq_no, uint64_t timestamp,
                    const Iv128& iv, Bytes ciphertext, const Digest256& prev_hash,
                    const Aes128Key& device_key) {
    LogEntry e;
    e.device_id = device_id;
    e.seq_no = seq_no;
    e.timestamp = timestamp;
    e.iv = iv;
    e.ciphertext = std::move(ciphertext);
    e.prev_hash = prev_hash;
    e.entry_hash = crypto::chain_hash(
        prev_hash, entry_hash_preimage(device_id, seq_no, timestamp, iv, e.ciphertext));
    e.mac = crypto::device_mac(device_key, e.entry_hash);
    return e;
}

void write_entry_body(ByteWriter& w, const LogEntry& entry) {
    w.u32(entry.seq_no);
    w.u64(entry.timestamp);
    w.raw(entry.iv.bytes);
    w.u16(static_cast<uint16_t>(entry.ciphertext.size()));
    w.raw(entry.ciphertext);
    w.raw(entry.prev_hash.bytes);
    w.raw(entry.entry_hash.bytes);
    w.raw(entry.mac.bytes);
}

LogEntry read_entry_body(ByteReader& r, const DeviceId& device_id) {
    LogEntry e;
    e.device_id = device_id;
    e.seq_no = r.u32();
    e.timestamp = r.u64();
    e.iv.bytes = r.take_array<16>();
    uint16_t ct_len = r.u16();
    if (ct_len == 0 || ct_len % 16 != 0) throw MalformedPacket("bad ciphertext length");
    auto ct = r.take(ct_len);
    e.ciphertext.assign(ct.begin(), ct.end());
    e.prev_hash.bytes = r.take_array<32>();
    e.entry_hash.bytes = r.take_array<32>();
    e.mac.bytes = r.take_array<32>();
    return e;
}

bool entry_verifies(const LogEntry& entry, const Digest256& expected_prev,
                    const Aes128Key& device_key) {
    if (entry.prev_hash != expected_prev) return false;
    Digest256 h = crypto::chain_hash(
        entry.prev_hash, entry_hash_preimage(entry.device_id, entry.seq_no, entry.timestamp,
                                             entry.iv, entry.ciphertext));
    if (h != entry.entry_hash) return false;
    return crypto::device_mac(device_key, entry.entry_hash) == entry.mac;
}

VerifyReport verify_log_bytes(std::span<const uint8_t> file, const Aes128Key& device_key) {
    ParsedLog parsed = parse_log_structure(file);
    VerifyReport rep;
    rep.torn_tail = parsed.torn_tail;
    Digest256 prev{};
    for (const LogEntry& e : parsed.entries) {
        if (!entry_verifies(e, prev, device_key)) {
            rep.ok = false;
            rep.tampered_seq = e.seq_no;
            return rep;
        }
        prev = e.entry_hash;
        ++rep.entries;
    }
    if (parsed.structural_bad_seq) {
        rep.ok = false;
        rep.tampered_seq = *parsed.structural_bad_seq;
    }
    return rep;
}

VerifyReport verify_log_file(const std::string& path, const Aes128Key& device_key) {
    return verify_log_bytes(read_file(path), device_key);
}

WormLog WormLog::open(const std::string& path, const DeviceId& device_id,
                      const Aes128Key& device_key, OpenMode mode) {
    WormLog log;
    log.path_ = path;
    log.device_id_ = device_id;
    log.device_key_ = device_key;
    log.mode_ = mode;

    if (!std::filesystem::exists(path)) {
        if (mode == OpenMode::ReadOnly) throw StorageError("log file missing: " + path);
        ByteWriter header;
        header.raw("BVL1");
        header.raw(device_id);
        write_file(path, header.bytes());
        return log;
    }

    Bytes file = read_file(path);
    ParsedLog parsed = parse_log_structure(file);
    if (parsed.device_id != device_id)
        throw ContractError("log belongs to a different device: " + path);
    if (parsed.structural_bad_seq)
        throw TamperedError(*parsed.structural_bad_seq, "structural corruption in " + path);

    Digest256 prev{};
    for (const LogEntry& e : parsed.entries) {
        if (!entry_verifies(e, prev, device_key))
            throw TamperedError(e.seq_no, "chain verification failed in " + path);
        prev = e.entry_hash;
    }
    if (parsed.torn_tail && mode == OpenMode::Append)
        std::filesystem::resize_file(path, parsed.committed_size);

    log.entries_ = std::move(parsed.entries);
    return log;
}

uint32_t WormLog::append(uint64_t timestamp, const Iv128& iv, Bytes ciphertext) {
    if (mode_ != OpenMode::Append) throw ContractError("log opened read-only");
    if (ciphertext.empty() || ciphertext.size() % 16 != 0 || ciphertext.size() > 65535)
        throw ContractError("ciphertext must be a positive multiple of 16 up to 65535 bytes");
    if (fail_appends_ > 0) {
        --fail_appends_;
        throw StorageError("simulated append failure: " + path_);
    }
    LogEntry e = make_entry(device_id_, next_seq(), timestamp, iv, std::move(ciphertext),
                            head_hash(), device_key_);
    ByteWriter body;
    write_entry_body(body, e);
    ByteWriter record;
    record.u32(static_cast<uint32_t>(body.size()));
    record.raw(body.bytes());
    append_to_file(path_, record.bytes());
    entries_.push_back(std::move(e));
    return entries_.back().seq_no;
}

Digest256 WormLog::head_hash() const {
    return entries_.empty() ? Digest256{} : entries_.back().entry_hash;
}

SyncJournal SyncJournal::open(const std::string& path, OpenMode mode) {
    SyncJournal j;
    j.path_ = path;
    j.mode_ = mode;

    if (!std::filesystem::exists(path)) {
        if (mode == OpenMode::ReadOnly) throw StorageError("journal file missing: " + path);
        Bytes magic = {'B', 'V', 'J', '1'};
        write_file(path, magic);
        return j;
    }

    Bytes file = read_file(path);
    if (file.size() < 4 || std::memcmp(file.data(), "BVJ1", 4) != 0)
        throw JournalCorrupt("bad journal magic: " + path);

    size_t pos = 4;
    while (file.size() - pos >= kJournalRecordSize) {
        ByteReader r{std::span(file).subspan(pos, kJournalRecordSize)};
        SyncJournalEntry e;
        e.batch_id = r.u32();
        e.first_seq = r.u32();
        e.last_seq = r.u32();
        e.acked_at = r.u64();
        Digest256 stored;
        stored.bytes = r.take_array<32>();
        if (crypto::checksum(std::span(file).subspan(pos, 20)) != stored)
            throw JournalCorrupt("journal record checksum mismatch: " + path);
        uint32_t expected_id = static_cast<uint32_t>(j.entries_.size());
        uint32_t expected_first = j.entries_.empty() ? 0 : j.entries_.back().last_seq + 1;
        if (e.batch_id != expected_id || e.first_seq != expected_first || e.last_seq < e.first_seq)
            throw JournalCorrupt("journal ranges not contiguous: " + path);
        j.entries_.push_back(e);
        pos += kJournalRecordSize;
    }
    // A trailing partial record is a torn write; ignored in memory, physically
    // removed only when we own the file for appending.
    if (pos != file.size() && mode == OpenMode::Append)
        std::filesystem::resize_file(path, pos);
    return j;
}

void SyncJournal::record(uint32_t batch_id, uint32_t first_seq, uint32_t last_seq,
                         uint64_t acked_at) {
    if (mode_ != OpenMode::Append) throw ContractError("journal opened read-only");
    if (last_seq < first_seq) throw JournalCorrupt("inverted batch range");
    for (const SyncJournalEntry& e : entries_) {
        if (e.batch_id == batch_id) {
            if (e.first_seq == first_seq && e.last_seq == last_seq) return;  // idempotent repeat
            throw JournalCorrupt("batch id re-used with a different range");
        }
    }
    uint32_t expected_id = next_batch_id();
    uint32_t expected_first = entries_.empty() ? 0 : entries_.back().last_seq + 1;
    if (batch_id != expected_id) throw JournalCorrupt("non-dense batch id");
    if (first_seq != expected_first) throw JournalCorrupt("gap or overlap in acked range");

    SyncJournalEntry e{batch_id, first_seq, last_seq, acked_at};
    append_to_file(path_, serialize_journal_record(e));
    entries_.push_back(e);
}

std::optional<uint32_t> SyncJournal::acked_head() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.back().last_seq;
}

std::vector<LogEntry> read_unsynced(const WormLog& log, const SyncJournal& journal) {
    uint32_t start = 0;
    if (auto head = journal.acked_head()) {
        if (*head >= log.next_seq())
            throw JournalCorrupt("journal acknowledges entries the log does not hold");
        start = *head + 1;
    }
    return std::vector<LogEntry>(log.entries().begin() + start, log.entries().end());
}

}  // namespace bvote
