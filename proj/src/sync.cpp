#include "bvote/sync.hpp"

#include "bvote/errors.hpp"

namespace bvote {

using crypto::Digest256;

Digest256 manifest_checksum(const DeviceId& device_id, uint32_t batch_id,
                            const std::vector<LogEntry>& entries) {
    ByteWriter w;
    w.raw(device_id);
    w.u32(batch_id);
    for (const LogEntry& e : entries) write_entry_body(w, e);
    return crypto::checksum(w.bytes());
}

std::vector<BatchManifest> build_batches(const std::vector<LogEntry>& unsynced,
                                         const DeviceId& device_id, uint32_t next_batch_id,
                                         uint32_t batch_size) {
    if (batch_size == 0) throw ContractError("batch_size must be positive");
    for (size_t i = 1; i < unsynced.size(); ++i)
        if (unsynced[i].seq_no != unsynced[i - 1].seq_no + 1)
            throw ContractError("unsynced entries not contiguous");

    std::vector<BatchManifest> batches;
    size_t pos = 0;
    while (pos < unsynced.size()) {
        size_t n = std::min<size_t>(batch_size, unsynced.size() - pos);
        BatchManifest m;
        m.device_id = device_id;
        m.batch_id = next_batch_id + static_cast<uint32_t>(batches.size());
        m.entries.assign(unsynced.begin() + pos, unsynced.begin() + pos + n);
        m.checksum = manifest_checksum(m.device_id, m.batch_id, m.entries);
        batches.push_back(std::move(m));
        pos += n;
    }
    return batches;
}

Bytes serialize_manifest(const BatchManifest& manifest) {
    ByteWriter w;
    w.raw("BVM1");
    w.raw(manifest.device_id);
    w.u32(manifest.batch_id);
    w.u16(static_cast<uint16_t>(manifest.entries.size()));
    for (const LogEntry& e : manifest.entries) write_entry_body(w, e);
    w.raw(manifest.checksum.bytes);
    return w.take();
}

BatchManifest parse_manifest(std::span<const uint8_t> frame) {
    try {
        ByteReader r(frame);
        if (!r.expect_magic("BVM1")) throw MalformedPacket("bad manifest magic");
        BatchManifest m;
        m.device_id = r.take_array<8>();
        m.batch_id = r.u32();
        uint16_t count = r.u16();
        if (count == 0) throw MalformedPacket("empty manifest");
        m.entries.reserve(count);
        for (uint16_t i = 0; i < count; ++i) m.entries.push_back(read_entry_body(r, m.device_id));
        m.checksum.bytes = r.take_array<32>();
        if (!r.done()) throw MalformedPacket("trailing bytes after manifest");
        return m;
    } catch (const MalformedPacket&) {
        throw;
    } catch (const std::out_of_range&) {
        throw MalformedPacket("manifest truncated");
    }
}

Bytes encode_response(const UploadOutcome& outcome) {
    ByteWriter w;
    if (const auto* ack = std::get_if<Ack>(&outcome)) {
        w.u8(0);
        w.u32(ack->batch_id);
    } else if (const auto* dup = std::get_if<AckDuplicate>(&outcome)) {
        w.u8(1);
        w.u32(dup->batch_id);
    } else if (const auto* nack = std::get_if<Nack>(&outcome)) {
        switch (nack->reason) {
            case NackReason::ChecksumMismatch: w.u8(2); break;
            case NackReason::ChainBreak: w.u8(3); break;
            case NackReason::MalformedManifest: w.u8(4); break;
        }
        w.u32(nack->batch_id);
    } else {
        throw ContractError("TransportDown has no wire form");
    }
    return w.take();
}

UploadOutcome decode_response(std::span<const uint8_t> frame) {
    if (frame.size() != 5) throw MalformedPacket("bad response length");
    ByteReader r(frame);
    uint8_t code = r.u8();
    uint32_t batch_id = r.u32();
    switch (code) {
        case 0: return Ack{batch_id};
        case 1: return AckDuplicate{batch_id};
        case 2: return Nack{NackReason::ChecksumMismatch, batch_id};
        case 3: return Nack{NackReason::ChainBreak, batch_id};
        case 4: return Nack{NackReason::MalformedManifest, batch_id};
        default: throw MalformedPacket("unknown response code");
    }
}

UploadResult upload_timed(Transport& transport, const BatchManifest& manifest, uint64_t send_at,
                          uint64_t transmit_ms) {
    if (!transport.is_up(send_at)) return {TransportDown{}, send_at};
    ExchangeResult res = transport.exchange(send_at + transmit_ms, serialize_manifest(manifest));
    uint64_t done = send_at + transmit_ms + res.delay_ms;
    if (!res.reply) return {TransportDown{}, done};
    try {
        return {decode_response(*res.reply), done};
    } catch (const MalformedPacket&) {
        return {TransportDown{}, done};  // garbled reply is as good as none
    }
}

UploadOutcome upload(Transport& transport, const BatchManifest& manifest, uint64_t send_at,
                     uint64_t transmit_ms) {
    return upload_timed(transport, manifest, send_at, transmit_ms).outcome;
}

SyncReport sync_cycle(const WormLog& log, SyncJournal& journal, Transport& transport,
                      const SyncConfig& config, uint64_t now) {
    SyncReport report;
    std::vector<LogEntry> unsynced = read_unsynced(log, journal);
    if (unsynced.empty()) {
        report.completed = true;
        return report;
    }
    if (!transport.is_up(now)) return report;

    std::vector<BatchManifest> batches =
        build_batches(unsynced, log.device_id(), journal.next_batch_id(), config.batch_size);
    uint64_t cursor = now;
    size_t i = 0;
    int retries = 0;
    while (i < batches.size()) {
        if (!transport.is_up(cursor)) break;
        const BatchManifest& batch = batches[i];
        ++report.batches_sent;
        UploadResult res = upload_timed(transport, batch, cursor, config.batch_transmit_ms);
        cursor = res.completed_at;
        const UploadOutcome& outcome = res.outcome;

        if (std::holds_alternative<TransportDown>(outcome)) break;
        if (const auto* nack = std::get_if<Nack>(&outcome)) {
            ++report.nacked;
            if (nack->reason == NackReason::ChainBreak) break;  // not self-healing
            if (++retries > config.max_retries_per_batch) break;
            continue;  // wire damage: resend the same manifest
        }
        uint32_t acked_id = std::holds_alternative<Ack>(outcome)
                                ? std::get<Ack>(outcome).batch_id
                                : std::get<AckDuplicate>(outcome).batch_id;
        if (acked_id != batch.batch_id) break;  // reply for something else entirely
        journal.record(batch.batch_id, batch.entries.front().seq_no, batch.entries.back().seq_no,
                       cursor);
        ++report.acked;
        ++i;
        retries = 0;
    }
    report.duration_ms = cursor - now;
    report.completed = (i == batches.size());
    return report;
}

Bytes serialize_telemetry(const DeviceId& device_id, const TelemetryCounters& counters) {
    ByteWriter w;
    w.raw("BVT1");
    w.raw(device_id);
    w.u32(counters.auth_success);
    w.u32(counters.auth_failure);
    w.u32(counters.committed);
    w.u32(counters.cycle_count);
    w.u64(counters.cycle_total_ms);
    return w.take();
}

std::pair<DeviceId, TelemetryCounters> parse_telemetry(std::span<const uint8_t> frame) {
    try {
        ByteReader r(frame);
        if (!r.expect_magic("BVT1")) throw MalformedPacket("bad telemetry magic");
        DeviceId id = r.take_array<8>();
        TelemetryCounters c;
        c.auth_success = r.u32();
        c.auth_failure = r.u32();
        c.committed = r.u32();
        c.cycle_count = r.u32();
        c.cycle_total_ms = r.u64();
        if (!r.done()) throw MalformedPacket("trailing bytes after telemetry");
        return {id, c};
    } catch (const MalformedPacket&) {
        throw;
    } catch (const std::out_of_range&) {
        throw MalformedPacket("telemetry truncated");
    }
}

}  // namespace bvote
