#include "bvote/simnet.hpp"

#include "bvote/errors.hpp"

namespace bvote {

void SimClock::schedule(uint64_t at, std::function<void()> fn) {
    if (at < now_) throw ContractError("cannot schedule into the past");
    queue_.push(Pending{at, next_seq_++, std::move(fn)});
}

bool SimClock::run_next() {
    if (queue_.empty()) return false;
    // priority_queue::top is const; the handler is moved out via const_cast,
    // which is safe because the element is popped immediately after.
    Pending p = std::move(const_cast<Pending&>(queue_.top()));
    queue_.pop();
    now_ = p.at;
    p.fn();
    return true;
}

void SimClock::run_until_empty() {
    while (run_next()) {
    }
}

bool LinkSchedule::is_up(uint64_t now) const {
    if (manual_override) return true;
    for (const LinkWindow& w : windows)
        if (now >= w.from_ms && now < w.to_ms) return w.up;
    return default_up;
}

std::optional<uint64_t> LinkSchedule::first_up_at(uint64_t from) const {
    if (is_up(from)) return from;
    // Candidate instants: every window boundary after `from`; between them the
    // state is constant, so checking boundaries is exhaustive.
    std::optional<uint64_t> best;
    auto consider = [&](uint64_t t) {
        if (t > from && is_up(t) && (!best || t < *best)) best = t;
    };
    for (const LinkWindow& w : windows) {
        consider(w.from_ms);
        consider(w.to_ms);
    }
    return best;
}

void validate_link_schedule(const LinkSchedule& schedule) {
    uint64_t prev_end = 0;
    for (const LinkWindow& w : schedule.windows) {
        if (w.to_ms <= w.from_ms) throw ConfigError("link window is empty or inverted");
        if (w.from_ms < prev_end) throw ConfigError("link windows overlap or are out of order");
        prev_end = w.to_ms;
    }
}

SendOutcome transport_send(const LinkSchedule& schedule, const FaultPlan& plan,
                           std::vector<bool>& used, DeterministicRng& rng, uint64_t now,
                           std::span<const uint8_t> bytes, bool corrupt) {
    if (!schedule.is_up(now)) return {SendOutcome::LinkDown, {}, now};
    if (rng.chance(plan.drop_probability)) return {SendOutcome::Dropped, {}, now};
    uint64_t delay = plan.delay_max_ms > plan.delay_min_ms
                         ? rng.uniform(plan.delay_min_ms, plan.delay_max_ms)
                         : plan.delay_min_ms;
    Bytes out(bytes.begin(), bytes.end());
    if (corrupt && !out.empty()) {
        for (size_t i = 0; i < plan.corruptions.size(); ++i) {
            if (used[i] || plan.corruptions[i].at_ms > now) continue;
            used[i] = true;
            out[plan.corruptions[i].byte_offset % out.size()] ^= 0xFF;
        }
    }
    return {SendOutcome::Delivered, std::move(out), now + delay};
}

SimTransport::SimTransport(LinkSchedule schedule, FaultPlan plan, Server& server,
                           DeterministicRng rng)
    : schedule_(std::move(schedule)),
      plan_(std::move(plan)),
      server_(&server),
      rng_(rng),
      corruption_used_(plan_.corruptions.size(), false) {}

bool SimTransport::is_up(uint64_t now) { return schedule_.is_up(now); }

ExchangeResult SimTransport::exchange(uint64_t at, std::span<const uint8_t> frame) {
    SendOutcome req = transport_send(schedule_, plan_, corruption_used_, rng_, at, frame, true);
    if (req.kind == SendOutcome::LinkDown) return {std::nullopt, 0};
    // A dropped frame still left the sender; the observer saw it.
    Bytes on_wire = req.kind == SendOutcome::Delivered ? req.bytes
                                                       : Bytes(frame.begin(), frame.end());
    trace_.push_back({at, true, req.kind == SendOutcome::Delivered, on_wire});
    if (req.kind != SendOutcome::Delivered) return {std::nullopt, 0};

    Bytes response = server_->handle_frame(req.at_ms, req.bytes);
    uint64_t req_delay = req.at_ms - at;
    if (response.empty()) return {std::nullopt, req_delay};  // one-way frame

    SendOutcome resp =
        transport_send(schedule_, plan_, corruption_used_, rng_, req.at_ms, response, false);
    if (resp.kind == SendOutcome::LinkDown) return {std::nullopt, req_delay};
    trace_.push_back({req.at_ms, false, resp.kind == SendOutcome::Delivered, response});
    if (resp.kind != SendOutcome::Delivered) return {std::nullopt, req_delay};
    return {std::move(resp.bytes), resp.at_ms - at};
}

}  // namespace bvote
