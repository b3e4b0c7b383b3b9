#include "bvote/terminal.hpp"

#include "bvote/errors.hpp"

namespace bvote {

namespace {

StepResult unchanged(const SessionState& state) { return {state, {}}; }

StepResult on_card(const TerminalEvent& event, uint64_t now, const TerminalCtx& ctx) {
    const auto& card = std::get<CardPresented>(event).card;
    uint64_t auth_done = now + ctx.config.steps.card_read_ms + ctx.config.steps.auth_ms;
    AuthResult r = authenticate(ctx.registry, card, ctx.card_key);
    if (r == AuthResult::Eligible) {
        return {AwaitingSelection{card.uid, now, auth_done},
                {Display{auth_done, kMsgAuthenticated}}};
    }
    return {Denied{r, auth_done + ctx.config.result_dwell_ms}, {Display{auth_done, kMsgDenied}}};
}

bool session_expired(uint64_t authenticated_at, uint64_t now, const TerminalCtx& ctx) {
    return now >= authenticated_at + ctx.config.session_timeout_ms;
}

}  // namespace

StepResult handle_event(const SessionState& state, const TerminalEvent& event, uint64_t now,
                        const TerminalCtx& ctx) {
    if (std::holds_alternative<Idle>(state)) {
        if (std::holds_alternative<CardPresented>(event)) return on_card(event, now, ctx);
        return unchanged(state);
    }

    if (const auto* sel = std::get_if<AwaitingSelection>(&state)) {
        if (std::holds_alternative<Tick>(event)) {
            if (session_expired(sel->authenticated_at, now, ctx)) return {Idle{}, {}};
            return unchanged(state);
        }
        if (const auto* pick = std::get_if<SelectCandidate>(&event)) {
            if (pick->index >= ctx.ballot.candidates.size())
                return {state, {Display{now, kMsgAuthenticated}}};  // re-prompt, mis-press
            return {AwaitingConfirmation{sel->uid, ctx.ballot.candidates[pick->index].id,
                                         sel->cycle_start, sel->authenticated_at},
                    {}};
        }
        return unchanged(state);
    }

    if (const auto* conf = std::get_if<AwaitingConfirmation>(&state)) {
        if (std::holds_alternative<Tick>(event)) {
            if (session_expired(conf->authenticated_at, now, ctx)) return {Idle{}, {}};
            return unchanged(state);
        }
        if (std::holds_alternative<Confirm>(event)) {
            uint64_t commit_at =
                now + ctx.config.steps.encryption_ms + ctx.config.steps.append_ms;
            Bytes packet = build_vote_packet(conf->uid, conf->candidate_id, now);
            return {Committed{conf->uid, commit_at + ctx.config.result_dwell_ms},
                    {AppendEntry{commit_at, conf->uid, std::move(packet)},
                     MarkVoted{commit_at, conf->uid},
                     Display{commit_at, kMsgRecorded},
                     RecordCycle{commit_at, commit_at - conf->cycle_start}}};
        }
        if (std::holds_alternative<Cancel>(event)) {
            return {AwaitingSelection{conf->uid, conf->cycle_start, conf->authenticated_at},
                    {Display{now, kMsgAuthenticated}}};  // back to the selection prompt
        }
        return unchanged(state);
    }

    if (const auto* d = std::get_if<Denied>(&state)) {
        if (std::holds_alternative<Tick>(event) && now >= d->until) return {Idle{}, {}};
        return unchanged(state);
    }
    if (const auto* c = std::get_if<Committed>(&state)) {
        if (std::holds_alternative<Tick>(event) && now >= c->until) return {Idle{}, {}};
        return unchanged(state);
    }
    return unchanged(state);
}

Terminal::Terminal(TerminalConfig config, VoterRegistry registry, Ballot ballot,
                   crypto::Aes128Key card_key, crypto::Aes128Key vote_key, WormLog& log,
                   DeterministicRng iv_rng)
    : config_(config),
      registry_(std::move(registry)),
      ballot_(std::move(ballot)),
      card_key_(card_key),
      vote_key_(vote_key),
      log_(&log),
      iv_rng_(iv_rng) {
    validate_ballot(ballot_);
}

std::vector<Effect> Terminal::on_event(uint64_t now, const TerminalEvent& event) {
    TerminalCtx ctx{registry_, ballot_, card_key_, config_};
    bool was_idle = std::holds_alternative<Idle>(state_);
    StepResult step = handle_event(state_, event, now, ctx);

    // Auth outcome accounting: an Idle + CardPresented step lands in either
    // AwaitingSelection or Denied.
    if (was_idle && std::holds_alternative<CardPresented>(event)) {
        if (std::holds_alternative<AwaitingSelection>(step.state)) ++metrics_.auth_success;
        if (std::holds_alternative<Denied>(step.state)) ++metrics_.auth_failure;
    }

    for (const Effect& effect : step.effects) {
        if (const auto* append = std::get_if<AppendEntry>(&effect)) {
            crypto::Iv128 iv;
            iv_rng_.fill(iv.bytes);
            Bytes ct = crypto::encrypt_packet(vote_key_, iv, append->packet);
            // A StorageError here propagates before state_ is reassigned, so
            // the terminal stays in AwaitingConfirmation with the registry
            // untouched: the vote is neither lost nor double-counted.
            log_->append(append->at, iv, std::move(ct));
        } else if (const auto* mark = std::get_if<MarkVoted>(&effect)) {
            mark_voted(registry_, mark->uid, mark->at);
            ++metrics_.committed;
        } else if (const auto* cycle = std::get_if<RecordCycle>(&effect)) {
            ++metrics_.cycle_count;
            metrics_.cycle_total_ms += cycle->duration_ms;
            if (cycle->duration_ms > metrics_.max_cycle_ms)
                metrics_.max_cycle_ms = cycle->duration_ms;
        }
    }
    state_ = std::move(step.state);
    return std::move(step.effects);
}

}  // namespace bvote
