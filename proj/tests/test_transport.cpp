#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>
#include <unistd.h>

#include "e3/transport.hpp"

using namespace e3;
using namespace e3::codec;
using namespace e3::transport;
using namespace std::chrono_literals;

namespace {

std::string unique_ipc_endpoint() {
    static std::atomic<int> counter{0};
    return "/tmp/e3loop-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++) + ".setup";
}

E3Pdu indication(uint32_t seq) {
    IndicationBody b;
    b.sm_id = 1;
    b.sequence = seq;
    b.payload = {1, 2, 3, 4};
    return E3Pdu{kProtocolVersion, std::move(b)};
}

E3Pdu accept_all_decider(const E3Pdu& req) {
    const auto& body = std::get<SetupRequestBody>(req.body);
    return E3Pdu{kProtocolVersion,
                 SetupResponseBody{body.dapp_id, true, body.sm_ids}};
}

E3Pdu reject_all_decider(const E3Pdu& req) {
    const auto& body = std::get<SetupRequestBody>(req.body);
    return E3Pdu{kProtocolVersion, SetupResponseBody{body.dapp_id, false, {}}};
}

}  // namespace

TEST_CASE("endpoint derivation") {
    SUBCASE("ipc strips the .setup suffix") {
        auto eps = derive_endpoints(TransportKind::LocalIpc, "/tmp/e3.setup");
        REQUIRE(eps.ok());
        CHECK(eps->setup == "/tmp/e3.setup");
        CHECK(eps->inbound == "/tmp/e3.in");
        CHECK(eps->outbound == "/tmp/e3.out");
    }
    SUBCASE("ipc without suffix appends") {
        auto eps = derive_endpoints(TransportKind::LocalIpc, "/tmp/foo");
        REQUIRE(eps.ok());
        CHECK(eps->inbound == "/tmp/foo.in");
        CHECK(eps->outbound == "/tmp/foo.out");
    }
    SUBCASE("tcp uses ports +1 and +2") {
        auto eps = derive_endpoints(TransportKind::Tcp, "127.0.0.1:9990");
        REQUIRE(eps.ok());
        CHECK(eps->inbound == "127.0.0.1:9991");
        CHECK(eps->outbound == "127.0.0.1:9992");
    }
    SUBCASE("host:port is not a valid ipc endpoint") {
        auto eps = derive_endpoints(TransportKind::LocalIpc, "host:port");
        REQUIRE(!eps.ok());
        CHECK(eps.error() == TransportError::InvalidEndpoint);
    }
    SUBCASE("malformed tcp endpoints") {
        CHECK(!derive_endpoints(TransportKind::Tcp, "localhost").ok());
        CHECK(!derive_endpoints(TransportKind::Tcp, ":80").ok());
        CHECK(!derive_endpoints(TransportKind::Tcp, "127.0.0.1:0").ok());
        CHECK(!derive_endpoints(TransportKind::Tcp, "127.0.0.1:junk").ok());
    }
}

TEST_CASE("memory channels") {
    auto [server, client] = make_memory_channel_pair();

    SUBCASE("data channels reject traffic before pairing") {
        auto pub = server->publish(indication(0));
        REQUIRE(!pub.ok());
        CHECK(pub.error() == TransportError::NotPaired);
        auto nxt = client->next(1ms);
        REQUIRE(!nxt.ok());
        CHECK(nxt.error() == TransportError::NotPaired);
    }

    SUBCASE("setup exchange pairs both sides") {
        CHECK(client->send_request(
            E3Pdu{kProtocolVersion, SetupRequestBody{7, {1}}}).ok());
        auto req = server->next_request(10ms);
        REQUIRE(req.ok());
        CHECK(server->reply(accept_all_decider(req.value())).ok());
        auto resp = client->poll_reply(10ms);
        REQUIRE(resp.ok());
        CHECK(std::get<SetupResponseBody>(resp->body).accepted);
        CHECK(server->paired());
        CHECK(client->paired());
        CHECK(server->publish(indication(0)).ok());
        auto got = client->next(10ms);
        REQUIRE(got.ok());
    }
}

TEST_CASE("memory channel fifo and backpressure") {
    auto [server, client] = make_memory_channel_pair();
    // Pair directly through the setup queues.
    client->send_request(E3Pdu{kProtocolVersion, SetupRequestBody{7, {1}}});
    server->reply(accept_all_decider(server->next_request(10ms).value()));
    client->poll_reply(10ms);

    SUBCASE("fifo order") {
        for (uint32_t i = 0; i < 3; ++i) CHECK(server->publish(indication(i)).ok());
        for (uint32_t i = 0; i < 3; ++i) {
            auto pdu = client->next(10ms);
            REQUIRE(pdu.ok());
            CHECK(std::get<IndicationBody>(pdu->body).sequence == i);
        }
    }

    SUBCASE("queue overflow drops the oldest") {
        for (uint32_t i = 0; i < 65; ++i) CHECK(server->publish(indication(i)).ok());
        CHECK(server->dropped() == 1);
        auto first = client->next(10ms);
        REQUIRE(first.ok());
        // Sequence 0 was dropped; delivery starts at 1.
        CHECK(std::get<IndicationBody>(first->body).sequence == 1);
    }

    SUBCASE("empty channel times out") {
        auto r = client->next(1ms);
        REQUIRE(!r.ok());
        CHECK(r.error() == TransportError::TimedOut);
    }

    SUBCASE("publish and next from different threads") {
        constexpr int kCount = 500;
        std::thread producer([&] {
            for (int i = 0; i < kCount; ++i) {
                server->publish(indication(static_cast<uint32_t>(i)));
                if (i % 50 == 0) std::this_thread::yield();
            }
        });
        uint32_t expect = 0;
        uint64_t received = 0;
        for (;;) {
            auto pdu = client->next(200ms);
            if (!pdu.ok()) break;
            const auto& body = std::get<IndicationBody>(pdu->body);
            // Drops allowed under overflow, reordering never.
            CHECK(body.sequence >= expect);
            expect = body.sequence + 1;
            if (++received + server->dropped() >= kCount) break;
        }
        producer.join();
        CHECK(received + server->dropped() == kCount);
    }
}

TEST_CASE("ipc server and client pairing") {
    const std::string ep = unique_ipc_endpoint();
    auto listener = open_server(TransportKind::LocalIpc, ep);
    REQUIRE(listener.ok());

    SUBCASE("happy path pairs and moves data both ways") {
        std::thread dapp([&] {
            auto client = connect(TransportKind::LocalIpc, ep,
                                  SetupRequestBody{7, {1}}, 2s);
            REQUIRE(client.ok());
            CHECK(client.value()->paired());
            auto pdu = client.value()->next(2s);
            REQUIRE(pdu.ok());
            const auto& ind = std::get<IndicationBody>(pdu->body);
            CHECK(ind.sequence == 11);
            CHECK(client.value()
                      ->publish(E3Pdu{kProtocolVersion, ControlBody{1, 11, {3, 4}}})
                      .ok());
        });
        auto server = listener.value()->accept(accept_all_decider, 2s);
        REQUIRE(server.ok());
        CHECK(server.value()->publish(indication(11)).ok());
        auto ctrl = server.value()->next(2s);
        REQUIRE(ctrl.ok());
        CHECK(std::get<ControlBody>(ctrl->body).entries ==
              std::vector<uint32_t>{3, 4});
        dapp.join();
    }

    SUBCASE("server rejecting all service models yields SetupRejected") {
        std::thread dapp([&] {
            auto client = connect(TransportKind::LocalIpc, ep,
                                  SetupRequestBody{7, {9}}, 2s);
            REQUIRE(!client.ok());
            CHECK(client.error() == TransportError::SetupRejected);
        });
        auto server = listener.value()->accept(reject_all_decider, 2s);
        CHECK(!server.ok());
        dapp.join();
    }

    SUBCASE("address in use") {
        auto second = open_server(TransportKind::LocalIpc, ep);
        REQUIRE(!second.ok());
        CHECK(second.error() == TransportError::AddressInUse);
    }
}

TEST_CASE("connect without a server is refused") {
    auto client = connect(TransportKind::LocalIpc, "/tmp/e3loop-nobody.setup",
                          SetupRequestBody{7, {1}}, 200ms);
    REQUIRE(!client.ok());
    CHECK(client.error() == TransportError::ConnectionRefused);
}

TEST_CASE("tcp pairing and fifo") {
    const std::string ep = "127.0.0.1:19390";
    auto listener = open_server(TransportKind::Tcp, ep);
    REQUIRE(listener.ok());

    std::thread dapp([&] {
        auto client = connect(TransportKind::Tcp, ep, SetupRequestBody{3, {1, 2}}, 2s);
        REQUIRE(client.ok());
        for (uint32_t i = 0; i < 16; ++i) {
            auto pdu = client.value()->next(2s);
            REQUIRE(pdu.ok());
            CHECK(std::get<IndicationBody>(pdu->body).sequence == i);
        }
    });
    auto server = listener.value()->accept(accept_all_decider, 2s);
    REQUIRE(server.ok());
    for (uint32_t i = 0; i < 16; ++i) CHECK(server.value()->publish(indication(i)).ok());
    dapp.join();
}

TEST_CASE("overhead accounting") {
    OverheadModel model;

    SUBCASE("ipc adds nothing") {
        model.mss = 1460;
        CHECK(account_overhead(model, TransportKind::LocalIpc, 1536) == 1536);
        for (size_t len : {1u, 7u, 64u, 1000u, 65536u})
            CHECK(account_overhead(model, TransportKind::LocalIpc, len) == len);
    }

    SUBCASE("tcp calibration point lands at 20%") {
        model.mss = kTcpCalibrationMss;
        const size_t wire = account_overhead(model, TransportKind::Tcp, 200);
        CHECK(wire == 240);
        CHECK(double(wire - 200) / 200 == doctest::Approx(0.20));
    }

    SUBCASE("sctp calibration point lands near 42%") {
        model.mss = kSctpCalibrationMss;
        const size_t wire = account_overhead(model, TransportKind::SctpModel, 162);
        CHECK(wire == 230);
        CHECK(double(wire - 162) / 162 == doctest::Approx(0.42).epsilon(0.01));
    }

    SUBCASE("ordering ipc <= tcp < sctp holds for any frame and mss") {
        for (size_t mss : {1u, 100u, 200u, 1460u, 9000u}) {
            model.mss = mss;
            for (size_t len = 1; len <= 65536; len = len * 2 + 1) {
                const size_t ipc = account_overhead(model, TransportKind::LocalIpc, len);
                const size_t tcp = account_overhead(model, TransportKind::Tcp, len);
                const size_t sctp = account_overhead(model, TransportKind::SctpModel, len);
                CHECK(ipc <= tcp);
                CHECK(tcp < sctp);
            }
        }
    }
}
