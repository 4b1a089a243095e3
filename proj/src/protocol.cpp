#include "pnp/protocol.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdlib>
#include <cstring>

namespace pnp::protocol {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[off + static_cast<std::size_t>(i)]} << (8 * i);
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what)
{
    if (v > 0xFFFFFFFFu) throw ProtocolError(std::string(what) + " exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

void put_header(std::vector<std::uint8_t>& out, const FrameHeader& h)
{
    for (std::uint8_t b : magic) out.push_back(b);
    out.push_back(version);
    out.push_back(static_cast<std::uint8_t>(h.opcode));
    put_u32(out, h.width);
    put_u32(out, h.height);
    put_u32(out, h.channels);
}

FrameHeader header_for(const Shape& s, Opcode op)
{
    return FrameHeader{op, checked_u32(s.width, "width"), checked_u32(s.height, "height"),
                       checked_u32(s.channels, "channels")};
}

Shape shape_of(const FrameHeader& h) { return Shape{h.width, h.height, h.channels}; }

void put_floats(std::vector<std::uint8_t>& out, std::span<const float> values)
{
    out.reserve(out.size() + 4 * values.size());
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

}  // namespace

std::vector<std::uint8_t> encode(const Frame& frame)
{
    std::vector<std::uint8_t> out;
    out.reserve(header_size + 4 * frame.payload.size() + frame.message.size() + 4);
    put_header(out, frame.header);
    if (frame.header.opcode == Opcode::error) {
        put_u32(out, checked_u32(frame.message.size(), "message length"));
        out.insert(out.end(), frame.message.begin(), frame.message.end());
    } else {
        if (frame.payload.size() != frame.header.elements())
            throw ProtocolError("payload length does not match the frame shape");
        put_floats(out, frame.payload);
    }
    return out;
}

std::vector<std::uint8_t> encode_request(const ImageBuffer& x)
{
    return encode(Frame{header_for(x.shape(), Opcode::denoise), to_f32(x), {}});
}

std::vector<std::uint8_t> encode_ok(const Shape& shape, std::span<const float> payload)
{
    return encode(Frame{header_for(shape, Opcode::ok), {payload.begin(), payload.end()}, {}});
}

std::vector<std::uint8_t> encode_error(const Shape& shape, const std::string& message)
{
    return encode(Frame{header_for(shape, Opcode::error), {}, message});
}

FrameHeader decode_header(std::span<const std::uint8_t> b)
{
    if (b.size() < header_size) throw ProtocolError("truncated frame header");
    if (!std::equal(magic.begin(), magic.end(), b.begin())) throw ProtocolError("bad magic");
    if (b[4] != version) throw ProtocolError("unsupported protocol version " + std::to_string(b[4]));
    FrameHeader h;
    switch (b[5]) {
    case 0x01: h.opcode = Opcode::denoise; break;
    case 0x81: h.opcode = Opcode::ok; break;
    case 0xFF: h.opcode = Opcode::error; break;
    default: throw ProtocolError("unknown opcode " + std::to_string(b[5]));
    }
    h.width = get_u32(b, 6);
    h.height = get_u32(b, 10);
    h.channels = get_u32(b, 14);
    if (h.opcode != Opcode::error) {
        if (h.elements() == 0) throw ProtocolError("frame has a zero extent");
        if (h.elements() > max_elements) throw ProtocolError("frame payload too large");
    }
    return h;
}

Frame decode(std::span<const std::uint8_t> b)
{
    Frame f;
    f.header = decode_header(b);
    auto rest = b.subspan(header_size);
    if (f.header.opcode == Opcode::error) {
        if (rest.size() < 4) throw ProtocolError("truncated error frame");
        const std::uint32_t n = get_u32(rest, 0);
        if (rest.size() != 4 + std::size_t{n}) throw ProtocolError("error frame length mismatch");
        f.message.assign(rest.begin() + 4, rest.end());
        return f;
    }
    const std::uint64_t n = f.header.elements();
    if (rest.size() != 4 * n) throw ProtocolError("payload length does not match the frame shape");
    f.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.payload[i] = std::bit_cast<float>(get_u32(rest, 4 * i));
    return f;
}

std::vector<float> to_f32(const ImageBuffer& x)
{
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i]);
    return out;
}

ImageBuffer from_f32(const Shape& shape, std::span<const float> values)
{
    std::vector<double> d(values.begin(), values.end());
    return ImageBuffer(shape, std::move(d));
}

// ---------------------------------------------------------------- transport

FdTransport::FdTransport(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns)
{
}

FdTransport::~FdTransport()
{
    if (!owns_) return;
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdTransport::write_all(std::span<const std::uint8_t> bytes)
{
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::write(write_fd_, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw PeerError(std::string("write to denoiser peer failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

void FdTransport::read_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw TimeoutError("denoiser peer timed out");
        pollfd p{read_fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
        if (r < 0) {
            if (errno == EINTR) continue;
            throw PeerError(std::string("poll failed: ") + std::strerror(errno));
        }
        if (r == 0) throw TimeoutError("denoiser peer timed out");
        const ssize_t n = ::read(read_fd_, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw PeerError(std::string("read from denoiser peer failed: ") + std::strerror(errno));
        }
        if (n == 0) throw PeerError("denoiser peer closed the connection");
        done += static_cast<std::size_t>(n);
    }
}

Frame read_frame(Transport& t, std::chrono::milliseconds timeout)
{
    std::vector<std::uint8_t> buf(header_size);
    t.read_exact(buf, timeout);
    const FrameHeader h = decode_header(buf);
    if (h.opcode == Opcode::error) {
        std::array<std::uint8_t, 4> len{};
        t.read_exact(len, timeout);
        const std::uint32_t n = get_u32(len, 0);
        if (n > (1u << 20)) throw ProtocolError("error message too long");
        buf.insert(buf.end(), len.begin(), len.end());
        const std::size_t off = buf.size();
        buf.resize(off + n);
        t.read_exact(std::span(buf).subspan(off), timeout);
    } else {
        buf.resize(header_size + 4 * h.elements());
        t.read_exact(std::span(buf).subspan(header_size), timeout);
    }
    return decode(buf);
}

std::chrono::milliseconds default_timeout()
{
    if (const char* s = std::getenv("PNPPDS_DENOISER_TIMEOUT_S")) {
        char* end = nullptr;
        const double secs = std::strtod(s, &end);
        if (end != s && secs > 0.0)
            return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
    }
    return std::chrono::seconds(30);
}

// ---------------------------------------------------------------- client

Client::Client(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout)
{
    if (!transport_) throw std::invalid_argument("Client: null transport");
}

ImageBuffer Client::denoise(const ImageBuffer& x)
{
    const auto req = encode_request(x);
    transport_->write_all(req);
    bytes_sent_ += req.size();
    Frame resp = read_frame(*transport_, timeout_);
    bytes_received_ += header_size + (resp.header.opcode == Opcode::error
                                          ? 4 + resp.message.size()
                                          : 4 * resp.payload.size());
    if (resp.header.opcode == Opcode::error) throw PeerError("denoiser peer error: " + resp.message);
    if (resp.header.opcode != Opcode::ok) throw ProtocolError("unexpected opcode in response");
    const Shape got = shape_of(resp.header);
    if (got != x.shape())
        throw ShapeError("denoiser response shape " + to_string(got) + " does not match request " +
                         to_string(x.shape()));
    return from_f32(got, resp.payload);
}

void Client::health_check()
{
    const ImageBuffer probe(Shape{1, 1, 1}, 0.5);
    (void)denoise(probe);
}

// ---------------------------------------------------------------- endpoints

namespace {

void ignore_sigpipe()
{
    static const bool once = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

class ChildTransport : public FdTransport {
public:
    ChildTransport(int rfd, int wfd, pid_t pid) : FdTransport(rfd, wfd, true), pid_(pid) {}
    ~ChildTransport() override
    {
        if (pid_ <= 0) return;
        ::kill(pid_, SIGTERM);
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }

private:
    pid_t pid_;
};

std::unique_ptr<Transport> spawn(const std::string& command)
{
    // exec so the tracked pid is the peer itself, not an intermediate shell
    const std::string line = "exec " + command;
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw PeerError("pipe() failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw PeerError("pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw PeerError("fork() failed");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<ChildTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Transport> connect_unix(const std::string& path)
{
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw PeerError("socket() failed");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) {
        ::close(fd);
        throw PeerError("unix socket path too long");
    }
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw PeerError("cannot connect to unix:" + path + ": " + std::strerror(errno));
    }
    return std::make_unique<FdTransport>(fd, fd, true);
}

std::unique_ptr<Transport> connect_tcp(const std::string& hostport)
{
    const auto colon = hostport.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("tcp endpoint needs host:port");
    const std::string host = hostport.substr(0, colon);
    const std::string port = hostport.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
        throw PeerError("cannot resolve " + hostport);
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw PeerError("cannot connect to tcp:" + hostport);
    return std::make_unique<FdTransport>(fd, fd, true);
}

}  // namespace

std::unique_ptr<Client> connect(const std::string& endpoint, std::chrono::milliseconds timeout)
{
    ignore_sigpipe();
    std::unique_ptr<Transport> t;
    if (endpoint.rfind("unix:", 0) == 0)
        t = connect_unix(endpoint.substr(5));
    else if (endpoint.rfind("tcp:", 0) == 0)
        t = connect_tcp(endpoint.substr(4));
    else if (endpoint.rfind("exec:", 0) == 0)
        t = spawn(endpoint.substr(5));
    else
        throw std::invalid_argument("unknown denoiser endpoint '" + endpoint +
                                    "' (expected unix:, tcp: or exec:)");
    auto client = std::make_unique<Client>(std::move(t), timeout);
    client->health_check();
    return client;
}

// ---------------------------------------------------------------- server

std::size_t serve(Transport& t, const std::function<ImageBuffer(const ImageBuffer&)>& handler)
{
    ignore_sigpipe();
    // Servers wait indefinitely for the next request.
    constexpr auto forever = std::chrono::hours(24 * 365);
    std::size_t served = 0;
    for (;;) {
        std::vector<std::uint8_t> head(header_size);
        try {
            t.read_exact(std::span(head).first(1), forever);
        } catch (const PeerError&) {
            return served;  // clean EOF between frames
        }
        FrameHeader h;
        try {
            t.read_exact(std::span(head).subspan(1), std::chrono::seconds(30));
            h = decode_header(head);
            if (h.opcode != Opcode::denoise) throw ProtocolError("expected a denoise request");
        } catch (const ProtocolError& e) {
            try {
                t.write_all(encode_error(Shape{0, 0, 0}, e.what()));
            } catch (const ProtocolError&) {
            }
            return served;
        }
        const Shape shape = shape_of(h);
        std::vector<std::uint8_t> body(4 * h.elements());
        try {
            t.read_exact(body, std::chrono::seconds(30));
        } catch (const ProtocolError& e) {
            try {
                t.write_all(encode_error(shape, e.what()));
            } catch (const ProtocolError&) {
            }
            return served;
        }
        std::vector<float> values(h.elements());
        for (std::size_t i = 0; i < values.size(); ++i)
            values[i] = std::bit_cast<float>(get_u32(body, 4 * i));
        std::vector<std::uint8_t> reply;
        try {
            // The handler's shape is sent as-is so clients can detect mismatches.
            const ImageBuffer out = handler(from_f32(shape, values));
            reply = encode_ok(out.shape(), to_f32(out));
        } catch (const std::exception& e) {
            reply = encode_error(shape, e.what());
        }
        t.write_all(reply);
        ++served;
    }
}

}  // namespace pnp::protocol
