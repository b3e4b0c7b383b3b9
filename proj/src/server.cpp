#include "bvote/server.hpp"

#include <algorithm>

#include "bvote/errors.hpp"

namespace bvote {

using crypto::Digest256;

const char* to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::DuplicateUidAcrossDevices: return "DuplicateUidAcrossDevices";
        case AnomalyKind::ChecksumFailure: return "ChecksumFailure";
        case AnomalyKind::ChainBreak: return "ChainBreak";
        case AnomalyKind::ReplayedBatch: return "ReplayedBatch";
        case AnomalyKind::TimestampRegression: return "TimestampRegression";
    }
    return "?";
}

const char* to_string(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::PaddingError: return "PaddingError";
        case ExclusionReason::MalformedPacket: return "MalformedPacket";
        case ExclusionReason::UnknownCandidate: return "UnknownCandidate";
        case ExclusionReason::DuplicateUid: return "DuplicateUid";
    }
    return "?";
}

Server::Server(crypto::Aes128Key vote_key, Ballot ballot)
    : vote_key_(vote_key), ballot_(std::move(ballot)) {
    validate_ballot(ballot_);
}

void Server::register_device(const DeviceId& device_id, const crypto::Aes128Key& device_key) {
    if (!devices_.emplace(device_id, DeviceState{device_key, {}, {}, 0, {}}).second)
        throw ContractError("device registered twice: " + device_id_to_string(device_id));
}

Server::DeviceState* Server::find_device(const DeviceId& id) {
    auto it = devices_.find(id);
    return it == devices_.end() ? nullptr : &it->second;
}

void Server::add_anomaly(Anomaly a) {
    std::string key = std::string(to_string(a.kind)) + "|" + a.device + "|" +
                      std::to_string(a.batch_id) + "|" + std::to_string(a.seq_no) + "|" +
                      a.uid_hex;
    if (!anomaly_keys_.insert(key).second) return;
    anomalies_.push_back(std::move(a));
}

Bytes Server::handle_frame(uint64_t now, std::span<const uint8_t> frame) {
    if (frame.size() >= 4 && std::memcmp(frame.data(), "BVT1", 4) == 0) {
        ingest_telemetry(now, frame);
        return {};
    }
    return encode_response(ingest(now, frame));
}

UploadOutcome Server::ingest(uint64_t now, std::span<const uint8_t> manifest_bytes) {
    // Best-effort batch id for otherwise unusable frames, so the Nack can
    // still be correlated by the sender.
    auto echo_id = [&]() -> uint32_t {
        if (manifest_bytes.size() >= 16 && std::memcmp(manifest_bytes.data(), "BVM1", 4) == 0) {
            ByteReader r(manifest_bytes.subspan(12, 4));
            return r.u32();
        }
        return 0xFFFFFFFFu;
    };

    BatchManifest m;
    try {
        m = parse_manifest(manifest_bytes);
    } catch (const MalformedPacket&) {
        return Nack{NackReason::MalformedManifest, echo_id()};
    }
    DeviceState* dev = find_device(m.device_id);
    if (!dev) return Nack{NackReason::MalformedManifest, m.batch_id};
    std::string device_name = device_id_to_string(m.device_id);

    if (manifest_checksum(m.device_id, m.batch_id, m.entries) != m.checksum) {
        add_anomaly({AnomalyKind::ChecksumFailure, device_name, m.batch_id, 0, "", now,
                     "manifest checksum mismatch"});
        return Nack{NackReason::ChecksumMismatch, m.batch_id};
    }

    auto known = dev->batch_index.find(m.batch_id);
    bool replayed_id = known != dev->batch_index.end();
    if (replayed_id && known->second == m.checksum) {
        dev->last_sync_at = now;
        return AckDuplicate{m.batch_id};
    }

    // Full validation before any state change. Entries below the device head
    // must be bitwise identical to what was accepted (per-entry dedup);
    // entries at or past it must extend the chain without gaps.
    uint32_t head = static_cast<uint32_t>(dev->entries.size());  // next expected seq
    auto chain_nack = [&](uint32_t seq, const char* what) -> UploadOutcome {
        AnomalyKind kind = replayed_id ? AnomalyKind::ReplayedBatch : AnomalyKind::ChainBreak;
        add_anomaly({kind, device_name, m.batch_id, seq, "", now, what});
        return Nack{NackReason::ChainBreak, m.batch_id};
    };

    for (size_t i = 1; i < m.entries.size(); ++i)
        if (m.entries[i].seq_no != m.entries[i - 1].seq_no + 1)
            return chain_nack(m.entries[i].seq_no, "seq numbers not contiguous");
    if (m.entries.front().seq_no > head)
        return chain_nack(m.entries.front().seq_no, "gap before batch");

    std::vector<const LogEntry*> fresh;  // validated entries past the head
    Digest256 running_prev = head == 0 ? Digest256{} : dev->entries.back().entry_hash;
    for (const LogEntry& e : m.entries) {
        Digest256 h = crypto::chain_hash(
            e.prev_hash,
            entry_hash_preimage(e.device_id, e.seq_no, e.timestamp, e.iv, e.ciphertext));
        if (h != e.entry_hash) {
            add_anomaly({AnomalyKind::ChecksumFailure, device_name, m.batch_id, e.seq_no, "", now,
                         "entry hash mismatch"});
            return Nack{NackReason::ChecksumMismatch, m.batch_id};
        }
        if (crypto::device_mac(dev->key, e.entry_hash) != e.mac) {
            add_anomaly({AnomalyKind::ChecksumFailure, device_name, m.batch_id, e.seq_no, "", now,
                         "entry mac mismatch"});
            return Nack{NackReason::ChecksumMismatch, m.batch_id};
        }
        if (e.seq_no < head) {
            if (!(e == dev->entries[e.seq_no]))
                return chain_nack(e.seq_no, "conflicts with an accepted entry");
        } else {
            if (e.prev_hash != running_prev) return chain_nack(e.seq_no, "prev hash mismatch");
            running_prev = e.entry_hash;
            fresh.push_back(&e);
        }
    }

    // Commit atomically.
    for (const LogEntry* e : fresh) {
        dev->entries.push_back(*e);
        accepted_order_.push_back(*e);
    }
    dev->batch_index[m.batch_id] = m.checksum;
    dev->last_sync_at = now;
    return fresh.empty() ? UploadOutcome(AckDuplicate{m.batch_id}) : UploadOutcome(Ack{m.batch_id});
}

void Server::ingest_telemetry(uint64_t now, std::span<const uint8_t> frame) {
    (void)now;
    try {
        auto [id, counters] = parse_telemetry(frame);
        DeviceState* dev = find_device(id);
        if (!dev) return;
        TelemetryCounters& t = dev->telemetry;
        t.auth_success = std::max(t.auth_success, counters.auth_success);
        t.auth_failure = std::max(t.auth_failure, counters.auth_failure);
        t.committed = std::max(t.committed, counters.committed);
        t.cycle_count = std::max(t.cycle_count, counters.cycle_count);
        t.cycle_total_ms = std::max(t.cycle_total_ms, counters.cycle_total_ms);
    } catch (const MalformedPacket&) {
        // Telemetry is advisory; a damaged frame is silently dropped.
    }
}

TallyResult tally_entries(std::span<const LogEntry> entries, const crypto::Aes128Key& vote_key,
                          const Ballot& ballot) {
    TallyResult result;
    for (const Candidate& c : ballot.candidates) result.counts[c.id] = 0;
    std::set<Bytes> seen_uids;

    for (const LogEntry& e : entries) {
        std::string device_name = device_id_to_string(e.device_id);
        Bytes plain;
        try {
            plain = crypto::decrypt_packet(vote_key, e.iv, e.ciphertext);
        } catch (const CryptoError&) {
            result.excluded.push_back({ExclusionReason::PaddingError, device_name, e.seq_no});
            continue;
        }
        std::optional<VotePacket> packet;
        try {
            packet = parse_vote_packet(plain);
        } catch (const MalformedPacket&) {
            result.excluded.push_back({ExclusionReason::MalformedPacket, device_name, e.seq_no});
            continue;
        }
        if (!ballot.has_candidate(packet->candidate_id)) {
            result.excluded.push_back({ExclusionReason::UnknownCandidate, device_name, e.seq_no});
            continue;
        }
        if (!seen_uids.insert(packet->uid.bytes()).second) {
            result.excluded.push_back({ExclusionReason::DuplicateUid, device_name, e.seq_no});
            continue;
        }
        ++result.counts[packet->candidate_id];
    }
    return result;
}

TallyResult Server::tally() const { return tally_entries(accepted_order_, vote_key_, ballot_); }

const std::vector<Anomaly>& Server::detect_anomalies(uint64_t now) {
    // Cross-device duplicate UIDs, in acceptance order: every occurrence of a
    // UID on a device other than the one that first delivered it.
    std::map<Bytes, DeviceId> first_device;
    for (const LogEntry& e : accepted_order_) {
        std::optional<VotePacket> packet;
        try {
            packet = parse_vote_packet(crypto::decrypt_packet(vote_key_, e.iv, e.ciphertext));
        } catch (const CryptoError&) {
            continue;  // undecodable entries are the tally's business
        } catch (const MalformedPacket&) {
            continue;
        }
        auto [it, fresh] = first_device.emplace(packet->uid.bytes(), e.device_id);
        if (!fresh && it->second != e.device_id) {
            add_anomaly({AnomalyKind::DuplicateUidAcrossDevices, device_id_to_string(e.device_id),
                         0, e.seq_no, packet->uid.to_hex(), now,
                         "uid first seen via " + device_id_to_string(it->second)});
        }
    }
    // Per-device timestamp regressions.
    for (const auto& [id, dev] : devices_) {
        for (size_t i = 1; i < dev.entries.size(); ++i) {
            if (dev.entries[i].timestamp < dev.entries[i - 1].timestamp) {
                add_anomaly({AnomalyKind::TimestampRegression, device_id_to_string(id), 0,
                             dev.entries[i].seq_no, "", now, "timestamp decreased"});
            }
        }
    }
    return anomalies_;
}

MonitoringSnapshot Server::snapshot() const {
    MonitoringSnapshot s;
    for (const auto& [id, dev] : devices_) {
        s.auth_success += dev.telemetry.auth_success;
        s.auth_failure += dev.telemetry.auth_failure;
        // A terminal's own committed counter is authoritative for turnout;
        // fall back to what actually arrived if telemetry never made it.
        s.turnout += std::max<uint64_t>(dev.telemetry.committed, dev.entries.size());
        s.votes_received += dev.entries.size();
        s.cycle_count += dev.telemetry.cycle_count;
        s.cycle_total_ms += dev.telemetry.cycle_total_ms;
        s.last_sync_at[device_id_to_string(id)] = dev.last_sync_at;
    }
    s.avg_cycle_ms =
        s.cycle_count == 0 ? 0.0 : static_cast<double>(s.cycle_total_ms) / s.cycle_count;
    s.anomalies = anomalies_;
    return s;
}

uint64_t Server::accepted_count(const DeviceId& device_id) const {
    auto it = devices_.find(device_id);
    return it == devices_.end() ? 0 : it->second.entries.size();
}

Bytes Server::archive() const {
    ByteWriter w;
    w.raw("BVA1");
    for (const LogEntry& e : accepted_order_) {
        w.raw(e.device_id);
        ByteWriter body;
        write_entry_body(body, e);
        w.u32(static_cast<uint32_t>(body.size()));
        w.raw(body.bytes());
    }
    return w.take();
}

std::vector<LogEntry> load_archive(std::span<const uint8_t> data) {
    ByteReader r(data);
    if (!r.expect_magic("BVA1")) throw MalformedPacket("bad archive magic");
    std::vector<LogEntry> entries;
    try {
        while (!r.done()) {
            DeviceId id = r.take_array<8>();
            uint32_t record_len = r.u32();
            ByteReader body(r.take(record_len));
            LogEntry e = read_entry_body(body, id);
            if (!body.done()) throw MalformedPacket("record length mismatch in archive");
            Digest256 h = crypto::chain_hash(
                e.prev_hash,
                entry_hash_preimage(e.device_id, e.seq_no, e.timestamp, e.iv, e.ciphertext));
            if (h != e.entry_hash)
                throw TamperedError(e.seq_no, "archive entry hash mismatch");
            entries.push_back(std::move(e));
        }
    } catch (const std::out_of_range&) {
        throw MalformedPacket("archive truncated");
    }
    return entries;
}

}  // namespace bvote
