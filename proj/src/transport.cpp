#include "e3/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace e3::transport {

namespace {

using codec::E3Pdu;

bool is_accepted_setup_response(const E3Pdu& pdu) {
    const auto* resp = std::get_if<codec::SetupResponseBody>(&pdu.body);
    return resp != nullptr && resp->accepted;
}

// Bounded FIFO with drop-oldest backpressure; shared by the memory channels
// and the socket publishers.
class PduQueue {
public:
    explicit PduQueue(size_t capacity) : cap_(capacity) {}

    // Returns true when an older frame had to be dropped to make room.
    bool push(E3Pdu pdu) {
        bool dropped = false;
        {
            std::lock_guard lk(mu_);
            if (q_.size() >= cap_) {
                q_.pop_front();
                ++drops_;
                dropped = true;
            }
            q_.push_back(std::move(pdu));
        }
        cv_.notify_one();
        return dropped;
    }

    std::optional<E3Pdu> pop(Micros timeout) {
        std::unique_lock lk(mu_);
        if (!cv_.wait_for(lk, timeout, [&] { return !q_.empty() || closed_; }))
            return std::nullopt;
        if (q_.empty()) return std::nullopt;  // woken by close
        E3Pdu pdu = std::move(q_.front());
        q_.pop_front();
        return pdu;
    }

    void close() {
        {
            std::lock_guard lk(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lk(mu_);
        return closed_;
    }
    uint64_t drops() const {
        std::lock_guard lk(mu_);
        return drops_;
    }

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<E3Pdu> q_;
    size_t cap_;
    uint64_t drops_ = 0;
    bool closed_ = false;
};

// ---------------------------------------------------------------- memory --

struct MemoryLink {
    explicit MemoryLink(size_t cap)
        : setup_requests(8), setup_replies(8), inbound(cap), outbound(cap) {}

    PduQueue setup_requests;
    PduQueue setup_replies;
    PduQueue inbound;   // server publishes, client consumes
    PduQueue outbound;  // client publishes, server consumes
    std::atomic<bool> paired{false};
    std::atomic<bool> closed{false};

    void close_all() {
        closed = true;
        setup_requests.close();
        setup_replies.close();
        inbound.close();
        outbound.close();
    }
};

class MemoryServerSet : public ServerChannelSet {
public:
    explicit MemoryServerSet(std::shared_ptr<MemoryLink> link)
        : link_(std::move(link)) {}
    ~MemoryServerSet() override { link_->close_all(); }

    Expected<E3Pdu, TransportError> next_request(Micros timeout) override {
        if (auto pdu = link_->setup_requests.pop(timeout)) return std::move(*pdu);
        return link_->closed ? TransportError::Disconnected : TransportError::TimedOut;
    }

    Status<TransportError> reply(const E3Pdu& pdu) override {
        if (link_->closed) return TransportError::Disconnected;
        if (is_accepted_setup_response(pdu)) link_->paired = true;
        link_->setup_replies.push(pdu);
        return Unit{};
    }

    Status<TransportError> publish(const E3Pdu& pdu) override {
        if (link_->closed) return TransportError::Disconnected;
        if (!link_->paired) return TransportError::NotPaired;
        link_->inbound.push(pdu);
        return Unit{};
    }

    Expected<E3Pdu, TransportError> next(Micros timeout) override {
        if (!link_->paired) return TransportError::NotPaired;
        if (auto pdu = link_->outbound.pop(timeout)) return std::move(*pdu);
        return link_->closed ? TransportError::Disconnected : TransportError::TimedOut;
    }

    bool paired() const override { return link_->paired; }
    uint64_t dropped() const override { return link_->inbound.drops(); }

private:
    std::shared_ptr<MemoryLink> link_;
};

class MemoryClientSet : public ClientChannelSet {
public:
    explicit MemoryClientSet(std::shared_ptr<MemoryLink> link)
        : link_(std::move(link)) {}
    ~MemoryClientSet() override { link_->close_all(); }

    Status<TransportError> send_request(const E3Pdu& pdu) override {
        if (link_->closed) return TransportError::Disconnected;
        link_->setup_requests.push(pdu);
        return Unit{};
    }

    Expected<E3Pdu, TransportError> poll_reply(Micros timeout) override {
        if (auto pdu = link_->setup_replies.pop(timeout)) return std::move(*pdu);
        return link_->closed ? TransportError::Disconnected : TransportError::TimedOut;
    }

    Status<TransportError> publish(const E3Pdu& pdu) override {
        if (link_->closed) return TransportError::Disconnected;
        if (!link_->paired) return TransportError::NotPaired;
        link_->outbound.push(pdu);
        return Unit{};
    }

    Expected<E3Pdu, TransportError> next(Micros timeout) override {
        if (!link_->paired) return TransportError::NotPaired;
        if (auto pdu = link_->inbound.pop(timeout)) return std::move(*pdu);
        return link_->closed ? TransportError::Disconnected : TransportError::TimedOut;
    }

    bool paired() const override { return link_->paired; }
    uint64_t dropped() const override { return link_->outbound.drops(); }

private:
    std::shared_ptr<MemoryLink> link_;
};

// --------------------------------------------------------------- sockets --

struct Deadline {
    Clock::time_point at;
    explicit Deadline(Micros timeout) : at(Clock::now() + timeout) {}
    Micros remaining() const {
        auto left = std::chrono::duration_cast<Micros>(at - Clock::now());
        return left.count() > 0 ? left : Micros{0};
    }
    bool expired() const { return Clock::now() >= at; }
};

int poll_fd(int fd, short events, Micros timeout) {
    pollfd p{fd, events, 0};
    timespec ts{
        static_cast<time_t>(timeout.count() / 1000000),
        static_cast<long>((timeout.count() % 1000000) * 1000),
    };
    return ppoll(&p, 1, &ts, nullptr);
}

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Fd& operator=(Fd&& o) noexcept {
        reset();
        std::swap(fd_, o.fd_);
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }
    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

bool write_all(int fd, const uint8_t* data, size_t len) {
    size_t off = 0;
    while (off < len) {
        ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) {
                if (poll_fd(fd, POLLOUT, Micros(100000)) <= 0) return false;
                continue;
            }
            return false;
        }
        off += static_cast<size_t>(n);
    }
    return true;
}

// Incremental frame reader over one stream connection.
class FrameReader {
public:
    explicit FrameReader(int fd) : fd_(fd) {}
    FrameReader(int fd, std::vector<uint8_t> pending)
        : fd_(fd), buf_(std::move(pending)) {}

    std::vector<uint8_t> take_buffer() { return std::move(buf_); }

    Expected<E3Pdu, TransportError> next(Micros timeout) {
        Deadline deadline(timeout);
        for (;;) {
            if (!buf_.empty()) {
                auto r = codec::decode(buf_);
                if (r.ok()) {
                    buf_.erase(buf_.begin(),
                               buf_.begin() + static_cast<ptrdiff_t>(r.value().consumed));
                    return std::move(r.value().pdu);
                }
                if (r.error() != codec::CodecError::Truncated)
                    return TransportError::ProtocolError;
            }
            int pr = poll_fd(fd_, POLLIN, deadline.remaining());
            if (pr < 0 && errno != EINTR) return TransportError::Disconnected;
            if (pr <= 0) {
                if (deadline.expired()) return TransportError::TimedOut;
                continue;
            }
            uint8_t chunk[65536];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n == 0) return TransportError::Disconnected;
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                return TransportError::Disconnected;
            }
            buf_.insert(buf_.end(), chunk, chunk + n);
        }
    }

private:
    int fd_;
    std::vector<uint8_t> buf_;
};

// Queue plus dedicated writer thread; the publishing side never blocks on a
// slow peer.
class SocketPublisher {
public:
    SocketPublisher(Fd fd, size_t capacity)
        : fd_(std::move(fd)), queue_(capacity) {
        writer_ = std::thread([this] { run(); });
    }

    ~SocketPublisher() {
        queue_.close();
        if (writer_.joinable()) writer_.join();
    }

    Status<TransportError> publish(const E3Pdu& pdu) {
        if (broken_) return TransportError::Disconnected;
        queue_.push(pdu);
        return Unit{};
    }

    uint64_t drops() const { return queue_.drops(); }

private:
    void run() {
        for (;;) {
            auto pdu = queue_.pop(Micros(50000));
            if (!pdu) {
                if (queue_.closed()) return;
                continue;
            }
            auto frame = codec::encode(*pdu);
            if (!frame) continue;  // unencodable paylod sizes are caller bugs
            if (!write_all(fd_.get(), frame.value().data(), frame.value().size())) {
                broken_ = true;
                return;
            }
        }
    }

    Fd fd_;
    PduQueue queue_;
    std::atomic<bool> broken_{false};
    std::thread writer_;
};

struct ParsedTcpEndpoint {
    std::string host;
    uint16_t port;
};

std::optional<ParsedTcpEndpoint> parse_tcp(const std::string& ep) {
    auto colon = ep.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= ep.size())
        return std::nullopt;
    ParsedTcpEndpoint out;
    out.host = ep.substr(0, colon);
    const char* first = ep.data() + colon + 1;
    const char* last = ep.data() + ep.size();
    unsigned port = 0;
    auto [p, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || p != last || port == 0 || port > 65533)
        return std::nullopt;
    out.port = static_cast<uint16_t>(port);
    return out;
}

bool valid_ipc_path(const std::string& ep) {
    if (ep.empty() || ep.find(':') != std::string::npos) return false;
    // Room for the ".out" suffix within sockaddr_un.
    return ep.size() + 4 < sizeof(sockaddr_un{}.sun_path);
}

Expected<Fd, TransportError> tcp_listen(const std::string& host, uint16_t port) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) return TransportError::ProtocolError;
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        return TransportError::InvalidEndpoint;
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        if (errno == EADDRINUSE) return TransportError::AddressInUse;
        if (errno == EACCES) return TransportError::PermissionDenied;
        return TransportError::InvalidEndpoint;
    }
    if (::listen(fd.get(), 8) < 0) return TransportError::ProtocolError;
    return fd;
}

Expected<Fd, TransportError> ipc_listen(const std::string& path) {
    Fd fd(::socket(AF_UNIX, SOCK_STREAM, 0));
    if (!fd.valid()) return TransportError::ProtocolError;
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        if (errno == EADDRINUSE) return TransportError::AddressInUse;
        if (errno == EACCES || errno == EPERM) return TransportError::PermissionDenied;
        return TransportError::InvalidEndpoint;
    }
    if (::listen(fd.get(), 8) < 0) return TransportError::ProtocolError;
    return fd;
}

Expected<Fd, TransportError> dial(TransportKind kind, const std::string& endpoint,
                                  Micros timeout) {
    Fd fd;
    sockaddr_storage storage{};
    socklen_t addrlen = 0;
    if (kind == TransportKind::LocalIpc) {
        fd = Fd(::socket(AF_UNIX, SOCK_STREAM, 0));
        auto* addr = reinterpret_cast<sockaddr_un*>(&storage);
        addr->sun_family = AF_UNIX;
        std::strncpy(addr->sun_path, endpoint.c_str(), sizeof(addr->sun_path) - 1);
        addrlen = sizeof(sockaddr_un);
    } else {
        auto parsed = parse_tcp(endpoint);
        if (!parsed) return TransportError::InvalidEndpoint;
        fd = Fd(::socket(AF_INET, SOCK_STREAM, 0));
        auto* addr = reinterpret_cast<sockaddr_in*>(&storage);
        addr->sin_family = AF_INET;
        addr->sin_port = htons(parsed->port);
        if (::inet_pton(AF_INET, parsed->host.c_str(), &addr->sin_addr) != 1)
            return TransportError::InvalidEndpoint;
        addrlen = sizeof(sockaddr_in);
    }
    if (!fd.valid()) return TransportError::ProtocolError;

    int flags = ::fcntl(fd.get(), F_GETFL, 0);
    ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd.get(), reinterpret_cast<sockaddr*>(&storage), addrlen);
    if (rc < 0 && errno != EINPROGRESS) {
        if (errno == ECONNREFUSED || errno == ENOENT)
            return TransportError::ConnectionRefused;
        return TransportError::ProtocolError;
    }
    if (rc < 0) {
        if (poll_fd(fd.get(), POLLOUT, timeout) <= 0) return TransportError::Timeout;
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err == ECONNREFUSED || err == ENOENT)
            return TransportError::ConnectionRefused;
        if (err != 0) return TransportError::ProtocolError;
    }
    ::fcntl(fd.get(), F_SETFL, flags);
    if (kind == TransportKind::Tcp) {
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return fd;
}

Expected<Fd, TransportError> accept_one(int listen_fd, TransportKind kind,
                                        Micros timeout) {
    if (poll_fd(listen_fd, POLLIN, timeout) <= 0) return TransportError::TimedOut;
    Fd conn(::accept(listen_fd, nullptr, nullptr));
    if (!conn.valid()) return TransportError::ProtocolError;
    if (kind == TransportKind::Tcp) {
        int one = 1;
        ::setsockopt(conn.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return conn;
}

class SocketServerSet : public ServerChannelSet {
public:
    SocketServerSet(Fd setup, std::vector<uint8_t> setup_pending, Fd inbound,
                    Fd outbound, size_t queue_capacity)
        : setup_fd_(std::move(setup)),
          setup_reader_(setup_fd_.get(), std::move(setup_pending)),
          outbound_fd_(std::move(outbound)),
          outbound_reader_(outbound_fd_.get()),
          publisher_(std::move(inbound), queue_capacity) {}

    Expected<E3Pdu, TransportError> next_request(Micros timeout) override {
        return setup_reader_.next(timeout);
    }
    Status<TransportError> reply(const E3Pdu& pdu) override {
        auto frame = codec::encode(pdu);
        if (!frame) return TransportError::ProtocolError;
        if (!write_all(setup_fd_.get(), frame->data(), frame->size()))
            return TransportError::Disconnected;
        return Unit{};
    }
    Status<TransportError> publish(const E3Pdu& pdu) override {
        return publisher_.publish(pdu);
    }
    Expected<E3Pdu, TransportError> next(Micros timeout) override {
        return outbound_reader_.next(timeout);
    }
    bool paired() const override { return true; }
    uint64_t dropped() const override { return publisher_.drops(); }

private:
    Fd setup_fd_;
    FrameReader setup_reader_;
    Fd outbound_fd_;
    FrameReader outbound_reader_;
    SocketPublisher publisher_;
};

class SocketClientSet : public ClientChannelSet {
public:
    SocketClientSet(Fd setup, std::vector<uint8_t> setup_pending, Fd inbound,
                    Fd outbound, size_t queue_capacity)
        : setup_fd_(std::move(setup)),
          setup_reader_(setup_fd_.get(), std::move(setup_pending)),
          inbound_fd_(std::move(inbound)),
          inbound_reader_(inbound_fd_.get()),
          publisher_(std::move(outbound), queue_capacity) {}

    Status<TransportError> send_request(const E3Pdu& pdu) override {
        auto frame = codec::encode(pdu);
        if (!frame) return TransportError::ProtocolError;
        if (!write_all(setup_fd_.get(), frame->data(), frame->size()))
            return TransportError::Disconnected;
        return Unit{};
    }
    Expected<E3Pdu, TransportError> poll_reply(Micros timeout) override {
        return setup_reader_.next(timeout);
    }
    Status<TransportError> publish(const E3Pdu& pdu) override {
        return publisher_.publish(pdu);
    }
    Expected<E3Pdu, TransportError> next(Micros timeout) override {
        return inbound_reader_.next(timeout);
    }
    bool paired() const override { return true; }
    uint64_t dropped() const override { return publisher_.drops(); }

private:
    Fd setup_fd_;
    FrameReader setup_reader_;
    Fd inbound_fd_;
    FrameReader inbound_reader_;
    SocketPublisher publisher_;
};

class SocketListener : public E3Listener {
public:
    SocketListener(TransportKind kind, Endpoints eps, Fd setup, Fd inbound, Fd outbound)
        : kind_(kind),
          endpoints_(std::move(eps)),
          setup_(std::move(setup)),
          inbound_(std::move(inbound)),
          outbound_(std::move(outbound)) {}

    ~SocketListener() override {
        if (kind_ == TransportKind::LocalIpc) {
            ::unlink(endpoints_.setup.c_str());
            ::unlink(endpoints_.inbound.c_str());
            ::unlink(endpoints_.outbound.c_str());
        }
    }

    Expected<std::unique_ptr<ServerChannelSet>, TransportError> accept(
        const std::function<E3Pdu(const E3Pdu&)>& decider, Micros timeout) override {
        Deadline deadline(timeout);
        auto setup_conn = accept_one(setup_.get(), kind_, deadline.remaining());
        if (!setup_conn) return setup_conn.error();

        FrameReader reader(setup_conn->get());
        auto req = reader.next(deadline.remaining());
        if (!req) return req.error();

        const E3Pdu response = decider(req.value());
        auto frame = codec::encode(response);
        if (!frame) return TransportError::ProtocolError;
        if (!write_all(setup_conn->get(), frame->data(), frame->size()))
            return TransportError::Disconnected;
        if (!is_accepted_setup_response(response)) return TransportError::SetupRejected;

        auto in_conn = accept_one(inbound_.get(), kind_, deadline.remaining());
        if (!in_conn) return in_conn.error();
        auto out_conn = accept_one(outbound_.get(), kind_, deadline.remaining());
        if (!out_conn) return out_conn.error();

        return std::unique_ptr<ServerChannelSet>(
            new SocketServerSet(std::move(setup_conn.value()), reader.take_buffer(),
                                std::move(in_conn.value()),
                                std::move(out_conn.value()),
                                kDefaultQueueCapacity));
    }

    const Endpoints& endpoints() const override { return endpoints_; }

private:
    TransportKind kind_;
    Endpoints endpoints_;
    Fd setup_;
    Fd inbound_;
    Fd outbound_;
};

}  // namespace

const char* to_string(TransportError e) {
    switch (e) {
        case TransportError::InvalidEndpoint: return "InvalidEndpoint";
        case TransportError::AddressInUse: return "AddressInUse";
        case TransportError::PermissionDenied: return "PermissionDenied";
        case TransportError::ConnectionRefused: return "ConnectionRefused";
        case TransportError::SetupRejected: return "SetupRejected";
        case TransportError::Timeout: return "Timeout";
        case TransportError::TimedOut: return "TimedOut";
        case TransportError::Disconnected: return "Disconnected";
        case TransportError::NotPaired: return "NotPaired";
        case TransportError::ProtocolError: return "ProtocolError";
    }
    return "?";
}

Expected<Endpoints, TransportError> derive_endpoints(TransportKind kind,
                                                     const std::string& setup_endpoint) {
    Endpoints eps;
    eps.setup = setup_endpoint;
    if (kind == TransportKind::LocalIpc) {
        if (!valid_ipc_path(setup_endpoint)) return TransportError::InvalidEndpoint;
        std::string base = setup_endpoint;
        if (constexpr std::string_view suffix = ".setup"; base.ends_with(suffix))
            base.resize(base.size() - suffix.size());
        eps.inbound = base + ".in";
        eps.outbound = base + ".out";
        return eps;
    }
    if (kind == TransportKind::Tcp) {
        auto parsed = parse_tcp(setup_endpoint);
        if (!parsed) return TransportError::InvalidEndpoint;
        eps.inbound = parsed->host + ":" + std::to_string(parsed->port + 1);
        eps.outbound = parsed->host + ":" + std::to_string(parsed->port + 2);
        return eps;
    }
    return TransportError::InvalidEndpoint;  // SctpModel is accounting-only
}

size_t account_overhead(const OverheadModel& model, TransportKind kind,
                        size_t frame_len) {
    const size_t mss = model.mss > 0 ? model.mss : 1;
    const size_t segments = (frame_len + mss - 1) / mss;
    switch (kind) {
        case TransportKind::LocalIpc:
            return frame_len + model.ipc_header_bytes * segments;
        case TransportKind::Tcp:
            return frame_len + model.tcp_header_bytes * segments;
        case TransportKind::SctpModel:
            return frame_len + model.sctp_header_bytes * segments;
    }
    return frame_len;
}

Expected<codec::E3Pdu, TransportError> ClientChannelSet::request(
    const codec::E3Pdu& pdu, Micros timeout) {
    Deadline deadline(timeout);
    if (auto s = send_request(pdu); !s) return s.error();
    return poll_reply(deadline.remaining());
}

std::pair<std::unique_ptr<ServerChannelSet>, std::unique_ptr<ClientChannelSet>>
make_memory_channel_pair(const MemoryChannelOptions& options) {
    auto link = std::make_shared<MemoryLink>(options.queue_capacity);
    return {std::make_unique<MemoryServerSet>(link),
            std::make_unique<MemoryClientSet>(link)};
}

Expected<std::unique_ptr<E3Listener>, TransportError> open_server(
    TransportKind kind, const std::string& endpoint) {
    auto eps = derive_endpoints(kind, endpoint);
    if (!eps) return eps.error();

    auto listen_on = [&](const std::string& ep) -> Expected<Fd, TransportError> {
        if (kind == TransportKind::LocalIpc) return ipc_listen(ep);
        auto parsed = parse_tcp(ep);
        if (!parsed) return TransportError::InvalidEndpoint;
        return tcp_listen(parsed->host, parsed->port);
    };

    auto setup = listen_on(eps->setup);
    if (!setup) return setup.error();
    auto inbound = listen_on(eps->inbound);
    if (!inbound) return inbound.error();
    auto outbound = listen_on(eps->outbound);
    if (!outbound) return outbound.error();

    return std::unique_ptr<E3Listener>(new SocketListener(
        kind, std::move(eps.value()), std::move(setup.value()),
        std::move(inbound.value()), std::move(outbound.value())));
}

Expected<std::unique_ptr<ClientChannelSet>, TransportError> connect(
    TransportKind kind, const std::string& endpoint,
    const codec::SetupRequestBody& setup, Micros timeout) {
    auto eps = derive_endpoints(kind, endpoint);
    if (!eps) return eps.error();
    Deadline deadline(timeout);

    auto setup_fd = dial(kind, eps->setup, deadline.remaining());
    if (!setup_fd) return setup_fd.error();

    auto frame = codec::encode(E3Pdu{codec::kProtocolVersion, setup});
    if (!frame) return TransportError::ProtocolError;
    if (!write_all(setup_fd->get(), frame->data(), frame->size()))
        return TransportError::Disconnected;

    FrameReader reader(setup_fd->get());
    auto reply = reader.next(deadline.remaining());
    if (!reply) {
        return reply.error() == TransportError::TimedOut ? TransportError::Timeout
                                                         : reply.error();
    }
    if (!is_accepted_setup_response(reply.value()))
        return TransportError::SetupRejected;

    auto inbound_fd = dial(kind, eps->inbound, deadline.remaining());
    if (!inbound_fd) return inbound_fd.error();
    auto outbound_fd = dial(kind, eps->outbound, deadline.remaining());
    if (!outbound_fd) return outbound_fd.error();

    return std::unique_ptr<ClientChannelSet>(new SocketClientSet(
        std::move(setup_fd.value()), reader.take_buffer(),
        std::move(inbound_fd.value()), std::move(outbound_fd.value()),
        kDefaultQueueCapacity));
}

}  // namespace e3::transport
