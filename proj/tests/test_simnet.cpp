#include "bvote/simnet.hpp"

#include "doctest.h"

#include "bvote/errors.hpp"
#include "bvote/vote_packet.hpp"

using namespace bvote;

namespace {

Server tiny_server() {
    Server s(crypto::Aes128Key{}, Ballot{{{1, "Alpha"}}});
    s.register_device(device_id_from_string("TERM0001"),
                      crypto::Aes128Key::from_hex("303132333435363738393a3b3c3d3e3f"));
    return s;
}

}  // namespace

TEST_CASE("the clock fires events in time order, ties by insertion") {
    SimClock clock;
    std::vector<int> order;
    clock.schedule(50, [&] { order.push_back(3); });
    clock.schedule(10, [&] { order.push_back(1); });
    clock.schedule(50, [&] { order.push_back(4); });
    clock.schedule(20, [&] {
        order.push_back(2);
        clock.schedule(30, [&] { order.push_back(25); });  // nested, still before 50
    });
    clock.run_until_empty();
    CHECK(order == std::vector<int>{1, 2, 25, 3, 4});
    CHECK(clock.now() == 50);

    clock.schedule(50, [] {});  // same instant is allowed
    CHECK_THROWS_AS(clock.schedule(49, [] {}), ContractError);
}

TEST_CASE("link schedules honor windows, defaults, and the manual override") {
    LinkSchedule s;
    s.default_up = true;
    s.windows = {{100, 200, false}, {200, 300, true}, {500, 800, false}};
    CHECK_NOTHROW(validate_link_schedule(s));

    CHECK(s.is_up(0));
    CHECK(s.is_up(99));
    CHECK_FALSE(s.is_up(100));   // half-open start
    CHECK_FALSE(s.is_up(199));
    CHECK(s.is_up(200));         // explicit up window
    CHECK(s.is_up(300));         // past the window, default again
    CHECK_FALSE(s.is_up(640));
    CHECK(s.is_up(800));

    s.manual_override = true;    // operator forces the link up
    CHECK(s.is_up(640));
    s.manual_override = false;

    CHECK(s.first_up_at(0) == uint64_t{0});
    CHECK(s.first_up_at(150) == uint64_t{200});
    CHECK(s.first_up_at(640) == uint64_t{800});

    LinkSchedule never;
    never.default_up = false;
    CHECK_FALSE(never.first_up_at(0).has_value());
    never.windows = {{40, 60, true}};
    CHECK(never.first_up_at(0) == uint64_t{40});
    CHECK(never.first_up_at(45) == uint64_t{45});
    CHECK_FALSE(never.first_up_at(60).has_value());

    LinkSchedule bad;
    bad.windows = {{100, 200, false}, {150, 300, true}};
    CHECK_THROWS_AS(validate_link_schedule(bad), ConfigError);
    bad.windows = {{200, 200, false}};
    CHECK_THROWS_AS(validate_link_schedule(bad), ConfigError);
    bad.windows = {{300, 400, false}, {100, 200, false}};
    CHECK_THROWS_AS(validate_link_schedule(bad), ConfigError);
}

TEST_CASE("transport_send applies link, drop, delay, and corruption in order") {
    LinkSchedule up;
    LinkSchedule down;
    down.default_up = false;
    Bytes msg{1, 2, 3, 4, 5};

    SUBCASE("link down consumes no randomness") {
        FaultPlan plan{0.5, 10, 20, {}};
        std::vector<bool> used;
        DeterministicRng a(1), b(1);
        SendOutcome r = transport_send(down, plan, used, a, 100, msg, true);
        CHECK(r.kind == SendOutcome::LinkDown);
        CHECK(a.next_u64() == b.next_u64());  // identical stream position
    }

    SUBCASE("drop probability one loses everything") {
        FaultPlan plan{1.0, 0, 0, {}};
        std::vector<bool> used;
        DeterministicRng rng(2);
        CHECK(transport_send(up, plan, used, rng, 0, msg, true).kind == SendOutcome::Dropped);
    }

    SUBCASE("delay is drawn uniformly within bounds") {
        FaultPlan plan{0.0, 50, 90, {}};
        std::vector<bool> used;
        DeterministicRng rng(3);
        for (int i = 0; i < 200; ++i) {
            SendOutcome r = transport_send(up, plan, used, rng, 1000, msg, true);
            CHECK(r.kind == SendOutcome::Delivered);
            CHECK(r.at_ms >= 1050);
            CHECK(r.at_ms <= 1090);
            CHECK(r.bytes == msg);
        }
    }

    SUBCASE("scheduled corruption fires exactly once, requests only") {
        FaultPlan plan{0.0, 0, 0, {{500, 2}, {900, 7}}};
        std::vector<bool> used(2, false);
        DeterministicRng rng(4);

        // Too early: nothing armed.
        SendOutcome r = transport_send(up, plan, used, rng, 499, msg, true);
        CHECK(r.bytes == msg);

        // Responses pass untouched even when an event is eligible.
        r = transport_send(up, plan, used, rng, 600, msg, false);
        CHECK(r.bytes == msg);
        CHECK_FALSE(used[0]);

        // First eligible request is hit at byte_offset % size.
        r = transport_send(up, plan, used, rng, 600, msg, true);
        Bytes hit = msg;
        hit[2] ^= 0xFF;
        CHECK(r.bytes == hit);
        CHECK(used[0]);

        // One-shot: the same event never fires again.
        r = transport_send(up, plan, used, rng, 700, msg, true);
        CHECK(r.bytes == msg);

        // The second event wraps its offset (7 % 5 == 2).
        r = transport_send(up, plan, used, rng, 950, msg, true);
        CHECK(r.bytes == hit);
        CHECK(used[1]);
    }
}

TEST_CASE("sim transport traces every frame an observer would capture") {
    Server server = tiny_server();
    LinkSchedule link;
    SimTransport t(link, FaultPlan{}, server, DeterministicRng(9));

    // A telemetry frame is one-way: request traced, no response frame.
    Bytes tele = serialize_telemetry(device_id_from_string("TERM0001"), {1, 0, 1, 1, 11500});
    ExchangeResult r = t.exchange(1000, tele);
    CHECK_FALSE(r.reply.has_value());
    REQUIRE(t.trace().size() == 1);
    CHECK(t.trace()[0].request);
    CHECK(t.trace()[0].delivered);
    CHECK(t.trace()[0].at == 1000);
    CHECK(t.trace()[0].bytes == tele);

    // Garbage still gets a (nack) response: two more frames.
    Bytes junk{1, 2, 3};
    r = t.exchange(2000, junk);
    REQUIRE(r.reply.has_value());
    CHECK(std::holds_alternative<Nack>(decode_response(*r.reply)));
    REQUIRE(t.trace().size() == 3);
    CHECK(t.trace()[1].request);
    CHECK_FALSE(t.trace()[2].request);
    CHECK(t.trace()[2].bytes == *r.reply);
}

TEST_CASE("a downed link swallows the exchange without touching the server") {
    Server server = tiny_server();
    LinkSchedule link;
    link.default_up = false;
    SimTransport t(link, FaultPlan{}, server, DeterministicRng(9));
    CHECK_FALSE(t.is_up(5));
    ExchangeResult r = t.exchange(5, Bytes{1, 2, 3});
    CHECK_FALSE(r.reply.has_value());
    CHECK(t.trace().empty());
    CHECK(server.snapshot().votes_received == 0);
}

TEST_CASE("identical seeds replay identical transport behavior") {
    FaultPlan plan{0.3, 5, 50, {{100, 3}}};
    LinkSchedule link;
    Bytes msg(40, 0xAB);

    auto run = [&] {
        Server server = tiny_server();
        SimTransport t(link, plan, server, DeterministicRng(1234));
        std::vector<WireFrame> frames;
        for (int i = 0; i < 50; ++i) t.exchange(100 + uint64_t(i) * 10, msg);
        return t.trace();
    };
    CHECK(run() == run());
}
