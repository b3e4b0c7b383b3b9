#include "bvote/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "bvote/errors.hpp"
#include "bvote/server.hpp"

namespace bvote {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("scenario: " + msg); }

const json& need(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) fail(std::string("missing field '") + key + "'");
    return *it;
}

crypto::Aes128Key parse_key_hex(const json& v, const std::string& what) {
    std::string hex;
    try {
        hex = v.get<std::string>();
        return crypto::Aes128Key::from_hex(hex);
    } catch (const std::exception&) {
        fail(what + " must be 32 hex characters");
    }
}

Uid parse_uid(const json& v) {
    try {
        return Uid::from_hex(v.get<std::string>());
    } catch (const std::exception&) {
        fail("uid must be 4, 7, or 10 bytes of even-length hex");
    }
}

ForgeryKind parse_forgery_kind(const std::string& s) {
    if (s == "bad_token") return ForgeryKind::BadToken;
    if (s == "unknown_uid") return ForgeryKind::UnknownUid;
    if (s == "altered_uid") return ForgeryKind::AlteredUid;
    fail("forgery kind must be bad_token, unknown_uid, or altered_uid");
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
    try {
        ScenarioConfig c;
        c.seed = j.value("seed", uint64_t{0});
        c.batch_size = j.value("batch_size", uint32_t{20});
        c.sync_interval_ms = j.value("sync_interval_ms", uint64_t{30000});
        if (j.contains("close_ms") && !j["close_ms"].is_null())
            c.close_ms = j["close_ms"].get<uint64_t>();

        const json& keys = need(j, "keys");
        c.card_key = parse_key_hex(need(keys, "card_key"), "card_key");
        c.vote_key = parse_key_hex(need(keys, "vote_key"), "vote_key");
        c.registry_key = parse_key_hex(need(keys, "registry_key"), "registry_key");
        for (const auto& [name, v] : need(keys, "device_keys").items())
            c.device_keys[name] = parse_key_hex(v, "device key '" + name + "'");

        for (const json& cand : need(j, "ballot"))
            c.ballot.candidates.push_back(
                {cand.at("id").get<uint16_t>(), cand.at("name").get<std::string>()});
        for (const json& d : need(j, "devices")) c.devices.push_back(d.get<std::string>());

        if (j.contains("step_durations")) {
            const json& s = j["step_durations"];
            StepDurations& st = c.terminal.steps;
            st.card_read_ms = s.value("card_read_ms", st.card_read_ms);
            st.auth_ms = s.value("auth_ms", st.auth_ms);
            st.selection_ms = s.value("selection_ms", st.selection_ms);
            st.confirmation_ms = s.value("confirmation_ms", st.confirmation_ms);
            st.encryption_ms = s.value("encryption_ms", st.encryption_ms);
            st.append_ms = s.value("append_ms", st.append_ms);
        }
        c.terminal.session_timeout_ms = j.value("session_timeout_ms", c.terminal.session_timeout_ms);
        c.terminal.result_dwell_ms = j.value("result_dwell_ms", c.terminal.result_dwell_ms);
        c.batch_transmit_ms = j.value("batch_transmit_ms", c.batch_transmit_ms);
        c.max_retries_per_batch = j.value("max_retries_per_batch", c.max_retries_per_batch);

        if (j.contains("voters"))
            for (const json& v : j["voters"]) {
                VoterPlan p{parse_uid(need(v, "uid")), need(v, "candidate").get<uint16_t>(),
                            need(v, "arrival_ms").get<uint64_t>(),
                            need(v, "device").get<std::string>(), std::nullopt};
                if (v.contains("revisit_ms") && !v["revisit_ms"].is_null())
                    p.revisit_ms = v["revisit_ms"].get<uint64_t>();
                c.voters.push_back(std::move(p));
            }
        if (j.contains("forged"))
            for (const json& f : j["forged"]) {
                ForgedPlan p{parse_forgery_kind(need(f, "kind").get<std::string>()),
                             parse_uid(need(f, "uid")), std::nullopt,
                             need(f, "arrival_ms").get<uint64_t>(),
                             need(f, "device").get<std::string>()};
                if (f.contains("source_uid") && !f["source_uid"].is_null())
                    p.source_uid = parse_uid(f["source_uid"]);
                c.forged.push_back(std::move(p));
            }
        if (j.contains("clones"))
            for (const json& cl : j["clones"])
                c.clones.push_back({parse_uid(need(cl, "uid")),
                                    need(cl, "candidate").get<uint16_t>(),
                                    need(cl, "arrival_ms").get<uint64_t>(),
                                    need(cl, "device").get<std::string>()});

        if (j.contains("link")) {
            const json& l = j["link"];
            c.link.default_up = l.value("default_up", true);
            c.link.manual_override = l.value("manual_override", false);
            if (l.contains("windows"))
                for (const json& w : l["windows"]) {
                    std::string state = need(w, "state").get<std::string>();
                    if (state != "up" && state != "down")
                        fail("link window state must be 'up' or 'down'");
                    c.link.windows.push_back({need(w, "from_ms").get<uint64_t>(),
                                              need(w, "to_ms").get<uint64_t>(), state == "up"});
                }
        }
        if (j.contains("faults")) {
            const json& f = j["faults"];
            c.faults.drop_probability = f.value("drop_probability", 0.0);
            c.faults.delay_min_ms = f.value("delay_min_ms", uint64_t{0});
            c.faults.delay_max_ms = f.value("delay_max_ms", uint64_t{0});
            if (f.contains("corruptions"))
                for (const json& ce : f["corruptions"])
                    c.faults.corruptions.push_back({need(ce, "at_ms").get<uint64_t>(),
                                                    need(ce, "byte_offset").get<uint64_t>()});
        }

        validate_scenario(c);
        return c;
    } catch (const json::exception& e) {
        fail(e.what());
    }
}

ScenarioConfig load_scenario_file(const std::string& path) {
    Bytes raw = read_file(path);
    json j = json::parse(raw.begin(), raw.end(), nullptr, false);
    if (j.is_discarded()) fail("not valid JSON: " + path);
    return parse_scenario(j);
}

void validate_scenario(const ScenarioConfig& c) {
    if (c.devices.empty()) fail("at least one device is required");
    std::set<std::string> names;
    for (const std::string& n : c.devices) {
        try {
            device_id_from_string(n);
        } catch (const ContractError&) {
            fail("device name must be exactly 8 printable characters: '" + n + "'");
        }
        if (!names.insert(n).second) fail("duplicate device: " + n);
        if (!c.device_keys.count(n)) fail("missing device key for " + n);
    }
    validate_ballot(c.ballot);
    if (c.batch_size == 0) fail("batch_size must be positive");
    if (c.sync_interval_ms == 0) fail("sync_interval_ms must be positive");
    if (c.max_retries_per_batch < 0) fail("max_retries_per_batch must be non-negative");

    std::set<std::string> uids;
    for (const VoterPlan& v : c.voters) {
        if (!names.count(v.device)) fail("voter assigned to unknown device: " + v.device);
        if (!c.ballot.has_candidate(v.candidate_id))
            fail("voter " + v.uid.to_hex() + " picks a candidate not on the ballot");
        if (!uids.insert(v.uid.to_hex()).second) fail("duplicate voter uid: " + v.uid.to_hex());
        if (v.revisit_ms && *v.revisit_ms <= v.arrival_ms)
            fail("revisit_ms must be after arrival_ms for uid " + v.uid.to_hex());
    }
    for (const ForgedPlan& f : c.forged) {
        if (!names.count(f.device)) fail("forged card assigned to unknown device: " + f.device);
        switch (f.kind) {
            case ForgeryKind::BadToken:
                if (!uids.count(f.uid.to_hex())) fail("bad_token uid must be a registered voter");
                break;
            case ForgeryKind::UnknownUid:
                if (uids.count(f.uid.to_hex()))
                    fail("unknown_uid collides with a registered voter: " + f.uid.to_hex());
                break;
            case ForgeryKind::AlteredUid:
                if (!f.source_uid) fail("altered_uid requires source_uid");
                if (!uids.count(f.source_uid->to_hex()))
                    fail("altered_uid source must be a registered voter");
                if (f.uid == *f.source_uid) fail("altered_uid must present a different uid");
                break;
        }
    }
    for (const ClonePlan& cl : c.clones) {
        if (!names.count(cl.device)) fail("clone assigned to unknown device: " + cl.device);
        if (!uids.count(cl.uid.to_hex())) fail("clone uid must be a registered voter");
        if (!c.ballot.has_candidate(cl.candidate_id))
            fail("clone picks a candidate not on the ballot");
    }
    validate_link_schedule(c.link);
    if (c.faults.drop_probability < 0.0 || c.faults.drop_probability > 1.0)
        fail("drop_probability must be within [0, 1]");
    if (c.faults.delay_min_ms > c.faults.delay_max_ms) fail("delay_min_ms exceeds delay_max_ms");
}

std::map<uint16_t, uint64_t> intended_tally(const ScenarioConfig& c) {
    std::map<uint16_t, uint64_t> t;
    for (const Candidate& cand : c.ballot.candidates) t[cand.id] = 0;
    for (const VoterPlan& v : c.voters) ++t[v.candidate_id];
    return t;
}

uint64_t last_arrival_ms(const ScenarioConfig& c) {
    uint64_t last = 0;
    for (const VoterPlan& v : c.voters) {
        last = std::max(last, v.arrival_ms);
        if (v.revisit_ms) last = std::max(last, *v.revisit_ms);
    }
    for (const ForgedPlan& f : c.forged) last = std::max(last, f.arrival_ms);
    for (const ClonePlan& cl : c.clones) last = std::max(last, cl.arrival_ms);
    return last;
}

namespace {

struct DeviceRun {
    std::string name;
    DeviceId id{};
    std::optional<WormLog> log;
    std::optional<SyncJournal> journal;
    std::unique_ptr<Terminal> terminal;
    std::vector<std::pair<uint64_t, SyncReport>> cycles;  // kick time, result
    std::optional<SyncReport> catch_up;                   // first completed post-close cycle
    uint64_t catch_up_at = 0;
    bool final_done = false;
    uint64_t final_done_at = 0;
    int attempts = 0;
    int pending = 0;  // presentations not yet resolved (committed or denied)
    int waits = 0;
    uint64_t sync_busy_until = 0;  // modeled end of the last upload cycle
};

struct Presentation {
    uint64_t at = 0;
    size_t device = 0;
    CardImage card;
    std::optional<size_t> choice;  // ballot index, once authenticated
};

CardImage forge_card(const ForgedPlan& f, const crypto::Aes128Key& card_key) {
    switch (f.kind) {
        case ForgeryKind::BadToken: {
            CardImage card = issue_card(f.uid, card_key);
            for (uint8_t& b : card.token) b ^= 0xFF;
            return card;
        }
        case ForgeryKind::UnknownUid:
            return issue_card(f.uid, card_key);
        case ForgeryKind::AlteredUid: {
            CardImage source = issue_card(*f.source_uid, card_key);
            return CardImage{f.uid, source.token};
        }
    }
    throw ContractError("unreachable forgery kind");
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const std::string& workdir) {
    validate_scenario(config);
    fs::create_directories(workdir);

    std::vector<Uid> roster;
    roster.reserve(config.voters.size());
    for (const VoterPlan& v : config.voters) roster.push_back(v.uid);
    VoterRegistry master = create_registry(roster, config.registry_key);

    Server server(config.vote_key, config.ballot);
    for (const std::string& name : config.devices)
        server.register_device(device_id_from_string(name), config.device_keys.at(name));

    DeterministicRng root(config.seed);
    SimTransport transport(config.link, config.faults, server, root.fork(3000));

    std::vector<std::unique_ptr<DeviceRun>> runs;
    std::map<std::string, size_t> device_index;
    for (size_t i = 0; i < config.devices.size(); ++i) {
        const std::string& name = config.devices[i];
        std::string log_path = (fs::path(workdir) / (name + ".log")).string();
        std::string journal_path = (fs::path(workdir) / (name + ".journal")).string();
        // A rerun in the same directory starts fresh; appending to a previous
        // run's log would corrupt the scenario.
        fs::remove(log_path);
        fs::remove(journal_path);

        auto run = std::make_unique<DeviceRun>();
        run->name = name;
        run->id = device_id_from_string(name);
        run->log.emplace(
            WormLog::open(log_path, run->id, config.device_keys.at(name), OpenMode::Append));
        run->journal.emplace(SyncJournal::open(journal_path, OpenMode::Append));
        run->terminal = std::make_unique<Terminal>(
            config.terminal, master, config.ballot, config.card_key, config.vote_key, *run->log,
            root.fork(1000 + static_cast<uint64_t>(i)));
        device_index[name] = i;
        runs.push_back(std::move(run));
    }

    std::vector<Presentation> pres;
    for (const VoterPlan& v : config.voters) {
        CardImage card = issue_card(v.uid, config.card_key);
        size_t dev = device_index.at(v.device);
        std::optional<size_t> choice = config.ballot.index_of(v.candidate_id);
        pres.push_back({v.arrival_ms, dev, card, choice});
        if (v.revisit_ms) pres.push_back({*v.revisit_ms, dev, card, choice});
    }
    for (const ForgedPlan& f : config.forged)
        pres.push_back(
            {f.arrival_ms, device_index.at(f.device), forge_card(f, config.card_key), std::nullopt});
    for (const ClonePlan& cl : config.clones)
        pres.push_back({cl.arrival_ms, device_index.at(cl.device),
                        issue_card(cl.uid, config.card_key),
                        config.ballot.index_of(cl.candidate_id)});

    SimClock clock;

    // Voter-side choreography: present the card, then walk the kiosk through
    // selection and confirmation at the modeled human pace. A busy kiosk makes
    // the voter wait and retry.
    std::function<void(size_t, int)> fire = [&](size_t idx, int tries) {
        const Presentation& p = pres[idx];
        DeviceRun& d = *runs[p.device];
        uint64_t now = clock.now();
        if (!std::holds_alternative<Idle>(d.terminal->state())) {
            if (tries < 240)
                clock.schedule(now + 500, [&fire, idx, tries] { fire(idx, tries + 1); });
            else
                --d.pending;  // gave up waiting in line
            return;
        }
        d.terminal->on_event(now, CardPresented{p.card});
        if (const auto* sel = std::get_if<AwaitingSelection>(&d.terminal->state())) {
            clock.schedule(sel->authenticated_at + config.terminal.session_timeout_ms,
                           [&clock, &d] { d.terminal->on_event(clock.now(), Tick{}); });
            if (p.choice) {
                size_t choice = *p.choice;
                clock.schedule(sel->authenticated_at + config.terminal.steps.selection_ms,
                               [&clock, &config, &d, choice] {
                    d.terminal->on_event(clock.now(), SelectCandidate{choice});
                    if (!std::holds_alternative<AwaitingConfirmation>(d.terminal->state())) {
                        --d.pending;
                        return;
                    }
                    clock.schedule(clock.now() + config.terminal.steps.confirmation_ms,
                                   [&clock, &d] {
                        d.terminal->on_event(clock.now(), Confirm{});
                        --d.pending;
                        if (const auto* done = std::get_if<Committed>(&d.terminal->state()))
                            clock.schedule(done->until, [&clock, &d] {
                                d.terminal->on_event(clock.now(), Tick{});
                            });
                    });
                });
            } else {
                --d.pending;  // forged cards never reach selection in practice
            }
        } else {
            --d.pending;
            if (const auto* denied = std::get_if<Denied>(&d.terminal->state()))
                clock.schedule(denied->until,
                               [&clock, &d] { d.terminal->on_event(clock.now(), Tick{}); });
        }
    };
    for (size_t i = 0; i < pres.size(); ++i) {
        ++runs[pres[i].device]->pending;
        clock.schedule(pres[i].at, [&fire, i] { fire(i, 0); });
    }

    uint64_t close = config.close_ms.value_or(last_arrival_ms(config) + 14500);
    SyncConfig sc{config.batch_size, config.batch_transmit_ms, config.max_retries_per_batch};
    uint64_t latest_activity = close;

    auto send_telemetry = [&](DeviceRun& d, uint64_t at) {
        if (!transport.is_up(at)) return;
        const TerminalMetrics& m = d.terminal->metrics();
        TelemetryCounters counters{m.auth_success, m.auth_failure, m.committed, m.cycle_count,
                                   m.cycle_total_ms};
        transport.exchange(at, serialize_telemetry(d.id, counters));
    };

    // One modem per kiosk: a cycle kicked while the previous upload is still
    // in flight starts when that upload finishes, never overlapping it.
    auto run_cycle = [&](DeviceRun& d) {
        uint64_t start = std::max(clock.now(), d.sync_busy_until);
        SyncReport rep = sync_cycle(*d.log, *d.journal, transport, sc, start);
        d.cycles.emplace_back(start, rep);
        uint64_t end = start + rep.duration_ms;
        d.sync_busy_until = end;
        latest_activity = std::max(latest_activity, end);
        return std::pair<SyncReport, uint64_t>(rep, end);
    };

    for (uint64_t t = config.sync_interval_ms; t < close; t += config.sync_interval_ms)
        for (auto& runp : runs) {
            DeviceRun* d = runp.get();
            clock.schedule(t, [&run_cycle, &send_telemetry, d] {
                std::pair<SyncReport, uint64_t> r = run_cycle(*d);
                send_telemetry(*d, r.second);
            });
        }

    // After close, every device drains its backlog; an offline link is polled
    // at its next scheduled Up edge.
    std::function<void(size_t)> drain = [&](size_t i) {
        DeviceRun& d = *runs[i];
        uint64_t now = clock.now();
        if (d.pending > 0) {
            // A voter who reached the kiosk before close is still mid-cycle;
            // their entry has not landed in the log yet.
            if (++d.waits <= 2000) clock.schedule(now + 500, [&drain, i] { drain(i); });
            return;
        }
        if (++d.attempts > 500) return;
        if (!transport.is_up(now)) {
            if (std::optional<uint64_t> next = transport.schedule().first_up_at(now + 1))
                clock.schedule(*next, [&drain, i] { drain(i); });
            return;
        }
        std::pair<SyncReport, uint64_t> r = run_cycle(d);
        if (r.first.completed) {
            d.final_done = true;
            d.final_done_at = r.second;
            if (!d.catch_up) {
                d.catch_up = r.first;
                d.catch_up_at = now;
            }
            send_telemetry(d, r.second);
        } else {
            clock.schedule(std::max(r.second, now + 1) + 1000, [&drain, i] { drain(i); });
        }
    };
    for (size_t i = 0; i < runs.size(); ++i)
        clock.schedule(close, [&drain, i] { drain(i); });

    clock.run_until_empty();
    uint64_t finalized = std::max({close, clock.now(), latest_activity});

    const std::vector<Anomaly>& anomalies = server.detect_anomalies(finalized);
    TallyResult tally = server.tally();
    MonitoringSnapshot snap = server.snapshot();

    // Run invariants, checked from the artifacts rather than driver state.
    bool chain_ok = true, one_vote = true, no_ghost = true, journal_ok = true, conserved = true;
    std::set<std::pair<std::string, uint16_t>> intent;
    for (const VoterPlan& v : config.voters) intent.insert({v.uid.to_hex(), v.candidate_id});
    for (const ClonePlan& cl : config.clones) intent.insert({cl.uid.to_hex(), cl.candidate_id});

    for (auto& runp : runs) {
        DeviceRun& d = *runp;
        chain_ok &= verify_log_file(d.log->path(), config.device_keys.at(d.name)).ok;

        std::set<std::string> seen;
        for (const LogEntry& e : d.log->entries()) {
            VotePacket p = parse_vote_packet(decrypt_packet(config.vote_key, e.iv, e.ciphertext));
            one_vote &= seen.insert(p.uid.to_hex()).second;
            no_ghost &= intent.count({p.uid.to_hex(), p.candidate_id}) > 0;
        }

        uint32_t expect_batch = 0, expect_seq = 0;
        uint64_t prev_acked = 0;
        for (const SyncJournalEntry& je : d.journal->entries()) {
            journal_ok &= je.batch_id == expect_batch++;
            journal_ok &= je.first_seq == expect_seq && je.last_seq >= je.first_seq;
            expect_seq = je.last_seq + 1;
            journal_ok &= je.acked_at >= prev_acked;
            prev_acked = je.acked_at;
        }

        std::vector<crypto::Digest256> central;
        for (const LogEntry& e : server.accepted())
            if (e.device_id == d.id) central.push_back(e.entry_hash);
        const std::vector<LogEntry>& local = d.log->entries();
        if (central.size() > local.size()) conserved = false;
        for (size_t k = 0; k < central.size() && k < local.size(); ++k)
            if (central[k] != local[k].entry_hash) conserved = false;
        if (d.final_done && central.size() != local.size()) conserved = false;
    }

    json jdev = json::object();
    uint64_t cycles_n = 0, cycles_total = 0, max_cycle = 0;
    for (auto& runp : runs) {
        DeviceRun& d = *runp;
        const TerminalMetrics& m = d.terminal->metrics();
        json jcycles = json::array();
        for (const auto& [at, rep] : d.cycles)
            if (rep.batches_sent > 0)
                jcycles.push_back({{"acked", rep.acked},
                                   {"at", at},
                                   {"batches_sent", rep.batches_sent},
                                   {"completed", rep.completed},
                                   {"duration_ms", rep.duration_ms},
                                   {"nacked", rep.nacked}});
        json dj = {{"auth_failure", m.auth_failure},
                   {"auth_success", m.auth_success},
                   {"committed", m.committed},
                   {"cycle_count", m.cycle_count},
                   {"cycle_total_ms", m.cycle_total_ms},
                   {"journal_batches", d.journal->next_batch_id()},
                   {"log_entries", d.log->next_seq()},
                   {"max_cycle_ms", m.max_cycle_ms},
                   {"sync_cycles", jcycles},
                   {"synced", d.final_done}};
        if (d.catch_up)
            dj["catch_up"] = {{"acked", d.catch_up->acked},
                              {"at", d.catch_up_at},
                              {"batches_sent", d.catch_up->batches_sent},
                              {"completed_ms", d.final_done_at},
                              {"duration_ms", d.catch_up->duration_ms}};
        else
            dj["catch_up"] = nullptr;
        jdev[d.name] = std::move(dj);
        cycles_n += m.cycle_count;
        cycles_total += m.cycle_total_ms;
        max_cycle = std::max(max_cycle, m.max_cycle_ms);
    }

    json janoms = json::array();
    for (const Anomaly& a : anomalies)
        janoms.push_back({{"batch_id", a.batch_id},
                          {"detail", a.detail},
                          {"detected_at", a.detected_at},
                          {"device", a.device},
                          {"kind", to_string(a.kind)},
                          {"seq_no", a.seq_no},
                          {"uid", a.uid_hex}});

    json jcounts = json::object();
    for (const auto& [id, n] : tally.counts) jcounts[std::to_string(id)] = n;
    json jex = json::array();
    for (const Exclusion& e : tally.excluded)
        jex.push_back({{"device", e.device}, {"reason", to_string(e.reason)}, {"seq_no", e.seq_no}});

    json jballot = json::array();
    for (const Candidate& cand : config.ballot.candidates)
        jballot.push_back({{"id", cand.id}, {"name", cand.name}});

    json jsync = json::object();
    for (const auto& [dev, at] : snap.last_sync_at) jsync[dev] = at;

    json report = {
        {"anomalies", janoms},
        {"ballot", jballot},
        {"close_ms", close},
        {"devices", jdev},
        {"finalized_ms", finalized},
        {"invariants",
         {{"chain_verify_ok", chain_ok},
          {"conservation", conserved},
          {"journal_monotone", journal_ok},
          {"no_ghost_votes", no_ghost},
          {"one_vote_per_uid", one_vote}}},
        {"seed", config.seed},
        {"snapshot",
         {{"auth_failure", snap.auth_failure},
          {"auth_success", snap.auth_success},
          {"avg_cycle_ms", snap.avg_cycle_ms},
          {"cycle_count", snap.cycle_count},
          {"last_sync_at", jsync},
          {"turnout", snap.turnout},
          {"votes_received", snap.votes_received}}},
        {"tally", {{"counts", jcounts}, {"exclusions", jex}}},
        {"timing",
         {{"max_cycle_ms", max_cycle},
          {"mean_cycle_ms", cycles_n ? static_cast<double>(cycles_total) / cycles_n : 0.0}}},
        {"wire_frames", transport.trace().size()},
    };

    Bytes archive = server.archive();
    write_file((fs::path(workdir) / "archive.bin").string(), archive);
    std::string dump = report.dump(2);
    dump += '\n';
    write_file((fs::path(workdir) / "report.json").string(), Bytes(dump.begin(), dump.end()));
    std::string txt = report_text(report);
    write_file((fs::path(workdir) / "report.txt").string(), Bytes(txt.begin(), txt.end()));

    return {std::move(report), transport.trace(), std::move(archive)};
}

bool replay_check(const ScenarioConfig& config, const std::string& workdir_a,
                  const std::string& workdir_b) {
    RunResult a = run_scenario(config, workdir_a);
    RunResult b = run_scenario(config, workdir_b);
    if (a.report.dump() != b.report.dump()) return false;
    if (a.trace != b.trace) return false;
    if (a.archive != b.archive) return false;
    for (const std::string& name : config.devices)
        for (const char* ext : {".log", ".journal"}) {
            Bytes fa = read_file((fs::path(workdir_a) / (name + ext)).string());
            Bytes fb = read_file((fs::path(workdir_b) / (name + ext)).string());
            if (fa != fb) return false;
        }
    return true;
}

std::string report_text(const json& r) {
    std::ostringstream out;
    out << "election run summary\n";
    out << "seed " << r["seed"] << ", close " << r["close_ms"] << " ms, finalized "
        << r["finalized_ms"] << " ms\n\n";
    out << "tally:\n";
    for (const json& cand : r["ballot"]) {
        std::string id = std::to_string(cand["id"].get<int>());
        out << "  " << cand["name"].get<std::string>() << " (" << id
            << "): " << r["tally"]["counts"][id] << "\n";
    }
    out << "  excluded: " << r["tally"]["exclusions"].size() << "\n\n";
    const json& s = r["snapshot"];
    out << "turnout " << s["turnout"] << ", votes received " << s["votes_received"] << "\n";
    out << "auth " << s["auth_success"] << " accepted / " << s["auth_failure"] << " denied\n";
    out << "mean cycle " << r["timing"]["mean_cycle_ms"] << " ms, max " << r["timing"]["max_cycle_ms"]
        << " ms\n\n";
    out << "devices:\n";
    for (const auto& [name, d] : r["devices"].items())
        out << "  " << name << ": " << d["log_entries"] << " entries, " << d["journal_batches"]
            << " batches, " << (d["synced"].get<bool>() ? "synced" : "NOT SYNCED") << "\n";
    out << "\nanomalies: " << r["anomalies"].size() << "\n";
    for (const json& a : r["anomalies"]) {
        out << "  " << a["kind"].get<std::string>() << " device " << a["device"].get<std::string>()
            << " batch " << a["batch_id"] << " seq " << a["seq_no"];
        if (!a["uid"].get<std::string>().empty()) out << " uid " << a["uid"].get<std::string>();
        out << "\n";
    }
    bool all_ok = true;
    for (const auto& [key, value] : r["invariants"].items()) all_ok &= value.get<bool>();
    out << "\ninvariants: " << (all_ok ? "all ok" : "VIOLATED") << "\n";
    if (!all_ok)
        for (const auto& [key, value] : r["invariants"].items())
            if (!value.get<bool>()) out << "  failed: " << key << "\n";
    return out.str();
}

}  // namespace bvote
