#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "e3/codec.hpp"
#include "e3/expected.hpp"

// The three logical channels of an E3 pairing and their transports.
//
// Every dApp-RAN pairing uses exactly three channels: a request-reply setup
// channel (E3 Setup and Subscription exchanges), an inbound channel carrying
// Indication and XAppControl frames to the dApp, and an outbound channel
// carrying Control and Report frames back. Data channels open only after an
// accepted SetupResponse (Idle -> SetupSent -> Paired).
//
// Two live transports are provided: LocalIpc (Unix domain stream sockets)
// and Tcp (loopback or LAN). SctpModel exists only in the overhead
// accountant. In-process tests and the deterministic scenario runner use a
// memory-backed channel pair with identical semantics and no sockets.

namespace e3::transport {

enum class TransportKind { LocalIpc, Tcp, SctpModel };

enum class TransportError {
    InvalidEndpoint,
    AddressInUse,
    PermissionDenied,
    ConnectionRefused,
    SetupRejected,
    Timeout,
    TimedOut,
    Disconnected,
    NotPaired,
    ProtocolError,
};

const char* to_string(TransportError e);

// Data-channel endpoints derived from the setup endpoint: ".in"/".out"
// suffixes for LocalIpc (a trailing ".setup" is replaced), ports +1/+2
// for Tcp.
struct Endpoints {
    std::string setup;
    std::string inbound;   // RAN -> dApp
    std::string outbound;  // dApp -> RAN
};

Expected<Endpoints, TransportError> derive_endpoints(TransportKind kind,
                                                     const std::string& setup_endpoint);

// ---- Overhead accountant (no bytes are sent) ----

struct OverheadModel {
    // Per-segment protocol bytes added on the wire.
    size_t ipc_header_bytes = 0;
    size_t tcp_header_bytes = 40;   // 20 B IP + 20 B TCP
    size_t sctp_header_bytes = 68;  // 20 B IP + 12 B SCTP common + DATA chunk
    size_t mss = 1460;              // segmentation unit for stream transports
};

// Calibration points where the model lands on the reference 20% / 42% rows.
inline constexpr size_t kTcpCalibrationMss = 200;
inline constexpr size_t kSctpCalibrationMss = 162;

size_t account_overhead(const OverheadModel& model, TransportKind kind,
                        size_t frame_len);

// ---- Channel sets ----

using Clock = std::chrono::steady_clock;
using Micros = std::chrono::microseconds;

inline constexpr size_t kDefaultQueueCapacity = 64;
inline constexpr Micros kDefaultConnectTimeout = std::chrono::seconds(2);

// dApp-side endpoint of one pairing.
class ClientChannelSet {
public:
    virtual ~ClientChannelSet() = default;

    // Setup channel. The split send/poll pair allows lockstep use from a
    // single thread; request() is the blocking convenience.
    virtual Status<TransportError> send_request(const codec::E3Pdu& pdu) = 0;
    virtual Expected<codec::E3Pdu, TransportError> poll_reply(Micros timeout) = 0;
    Expected<codec::E3Pdu, TransportError> request(const codec::E3Pdu& pdu,
                                                   Micros timeout);

    // Outbound data channel (Control / Report). Never blocks: frames queue up
    // to the channel capacity, then the oldest is dropped and counted.
    virtual Status<TransportError> publish(const codec::E3Pdu& pdu) = 0;
    // Inbound data channel (Indication / XAppControl).
    virtual Expected<codec::E3Pdu, TransportError> next(Micros timeout) = 0;

    virtual bool paired() const = 0;
    virtual uint64_t dropped() const = 0;  // publish-side drop counter
};

// RAN-side endpoint of one pairing.
class ServerChannelSet {
public:
    virtual ~ServerChannelSet() = default;

    virtual Expected<codec::E3Pdu, TransportError> next_request(Micros timeout) = 0;
    virtual Status<TransportError> reply(const codec::E3Pdu& pdu) = 0;

    // Inbound data channel towards the dApp (Indication / XAppControl).
    virtual Status<TransportError> publish(const codec::E3Pdu& pdu) = 0;
    // Outbound data channel from the dApp (Control / Report).
    virtual Expected<codec::E3Pdu, TransportError> next(Micros timeout) = 0;

    virtual bool paired() const = 0;
    virtual uint64_t dropped() const = 0;
};

// ---- In-memory pairing (deterministic, single process) ----

struct MemoryChannelOptions {
    size_t queue_capacity = kDefaultQueueCapacity;
};

// Returns a pre-wired server/client pair sharing queues. The pairing state
// machine still applies: data channels reject traffic until an accepted
// SetupResponse has passed through reply()/poll_reply().
std::pair<std::unique_ptr<ServerChannelSet>, std::unique_ptr<ClientChannelSet>>
make_memory_channel_pair(const MemoryChannelOptions& options = {});

// ---- Socket transports ----

// RAN-side listener bound to the three derived endpoints. Pairings are
// accepted one at a time; each accept() yields the ChannelSet of one dApp.
class E3Listener {
public:
    virtual ~E3Listener() = default;

    // Waits for a dApp: reads its SetupRequest, lets `decider` produce the
    // SetupResponse PDU, and on acceptance completes the data-channel
    // pairing.
    virtual Expected<std::unique_ptr<ServerChannelSet>, TransportError> accept(
        const std::function<codec::E3Pdu(const codec::E3Pdu&)>& decider,
        Micros timeout) = 0;

    virtual const Endpoints& endpoints() const = 0;
};

Expected<std::unique_ptr<E3Listener>, TransportError> open_server(
    TransportKind kind, const std::string& endpoint);

// dApp-side connect: dials the setup channel, runs the Setup exchange, and
// on acceptance opens the data channels. Fails with SetupRejected when the
// server accepts no requested service model.
Expected<std::unique_ptr<ClientChannelSet>, TransportError> connect(
    TransportKind kind, const std::string& endpoint,
    const codec::SetupRequestBody& setup,
    Micros timeout = kDefaultConnectTimeout);

}  // namespace e3::transport
