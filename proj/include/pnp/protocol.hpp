#pragma once

// External-denoiser wire protocol.
//
//   request : "PNPD" | 0x01 | 0x01 | u32 width | u32 height | u32 channels |
//             width*height*channels f32 (little-endian, planar row-major)
//   response: "PNPD" | 0x01 | 0x81 | shape | f32 payload            (ok)
//             "PNPD" | 0x01 | 0xFF | shape | u32 length | UTF-8     (error)
//
// One response per request, in order.

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnp/image.hpp"

namespace pnp::protocol {

inline constexpr std::array<std::uint8_t, 4> magic{'P', 'N', 'P', 'D'};
inline constexpr std::uint8_t version = 0x01;
inline constexpr std::size_t header_size = 18;
/// Largest payload a peer will accept, in elements.
inline constexpr std::uint64_t max_elements = 1ull << 28;

enum class Opcode : std::uint8_t { denoise = 0x01, ok = 0x81, error = 0xFF };

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class TimeoutError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};
class PeerError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

struct FrameHeader {
    Opcode opcode = Opcode::denoise;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;

    std::uint64_t elements() const
    {
        return std::uint64_t{width} * std::uint64_t{height} * std::uint64_t{channels};
    }
};

struct Frame {
    FrameHeader header;
    std::vector<float> payload;  // ok / denoise frames
    std::string message;         // error frames
};

std::vector<std::uint8_t> encode(const Frame& frame);
std::vector<std::uint8_t> encode_request(const ImageBuffer& x);
std::vector<std::uint8_t> encode_ok(const Shape& shape, std::span<const float> payload);
std::vector<std::uint8_t> encode_error(const Shape& shape, const std::string& message);

/// Parses the fixed 18-byte header. Throws ProtocolError on bad magic,
/// version or opcode.
FrameHeader decode_header(std::span<const std::uint8_t> bytes);
/// Decodes a complete frame held in `bytes` (no trailing data allowed).
Frame decode(std::span<const std::uint8_t> bytes);

std::vector<float> to_f32(const ImageBuffer& x);
ImageBuffer from_f32(const Shape& shape, std::span<const float> values);

/// Bidirectional byte stream.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
    /// Reads exactly bytes.size() bytes or throws (TimeoutError, ProtocolError
    /// on EOF).
    virtual void read_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout) = 0;
};

/// Transport over a pair of POSIX file descriptors (may be the same socket).
class FdTransport : public Transport {
public:
    FdTransport(int read_fd, int write_fd, bool owns);
    ~FdTransport() override;
    FdTransport(const FdTransport&) = delete;
    FdTransport& operator=(const FdTransport&) = delete;

    void write_all(std::span<const std::uint8_t> bytes) override;
    void read_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout) override;

private:
    int read_fd_;
    int write_fd_;
    bool owns_;
};

/// Reads one frame from the transport.
Frame read_frame(Transport& t, std::chrono::milliseconds timeout);

/// Default per-request timeout; PNPPDS_DENOISER_TIMEOUT_S overrides it.
std::chrono::milliseconds default_timeout();

/// Client handle. Exclusive: one request in flight at a time.
class Client {
public:
    Client(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout);
    virtual ~Client() = default;

    /// Sends `x` and returns the peer's output (32-bit round trip).
    ImageBuffer denoise(const ImageBuffer& x);
    /// Sends a 1x1x1 frame and checks for a well-formed ok reply.
    void health_check();

    std::uint64_t bytes_sent() const { return bytes_sent_; }
    std::uint64_t bytes_received() const { return bytes_received_; }
    std::chrono::milliseconds timeout() const { return timeout_; }

private:
    std::unique_ptr<Transport> transport_;
    std::chrono::milliseconds timeout_;
    std::uint64_t bytes_sent_ = 0;
    std::uint64_t bytes_received_ = 0;
};

/// Opens a client for an endpoint string:
///   unix:/path/to/socket
///   tcp:host:port
///   exec:<shell command>   (spawned child speaking the protocol on stdio;
///                           killed when the client is destroyed)
/// A health check is performed before returning.
std::unique_ptr<Client> connect(const std::string& endpoint,
                                std::chrono::milliseconds timeout = default_timeout());

/// Serves requests on `t` until EOF. `handler` maps a denoise input to its
/// output; exceptions become error frames. Malformed frames get an error
/// frame and the connection is closed. Returns the number of requests served.
std::size_t serve(Transport& t, const std::function<ImageBuffer(const ImageBuffer&)>& handler);

}  // namespace pnp::protocol
