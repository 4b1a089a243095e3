// Protocol test peer. Serves on stdio by default or on a unix socket.
//
// Modes: echo, scale:<s>, dct:<t>, and misbehaving modes that only act on
// requests with more than one element (so the 1x1x1 health probe passes):
// wrong-shape, error, garbage (junk bytes, then exit), die (exit without a
// reply), hang (never reply).

#include <CLI11.hpp>

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>

#include "pnp/denoisers.hpp"
#include "pnp/protocol.hpp"

using namespace pnp;

namespace {

std::function<ImageBuffer(const ImageBuffer&)> make_handler(const std::string& mode)
{
    if (mode == "echo") return [](const ImageBuffer& x) { return x; };
    if (mode.rfind("scale:", 0) == 0 || mode.rfind("dct:", 0) == 0) {
        std::shared_ptr<Denoiser> d = make_denoiser(mode.rfind("scale:", 0) == 0 ? "scaled:" + mode.substr(6) : mode);
        return [d](const ImageBuffer& x) { return d->denoise(x); };
    }
    return [mode](const ImageBuffer& x) -> ImageBuffer {
        if (x.size() <= 1) return x;
        if (mode == "wrong-shape") {
            Shape s = x.shape();
            s.width += 1;
            return ImageBuffer(s, 0.0);
        }
        if (mode == "error") throw std::runtime_error("requested failure");
        if (mode == "garbage") {
            const char junk[] = "JUNKJUNKJUNKJUNKJUNKJUNK";
            if (::write(1, junk, sizeof junk) < 0) std::_Exit(3);
            std::_Exit(0);
        }
        if (mode == "die") std::_Exit(0);
        if (mode == "hang") {
            for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
        }
        throw std::runtime_error("unknown mode " + mode);
    };
}

int serve_unix(const std::string& path, const std::function<ImageBuffer(const ImageBuffer&)>& handler,
               bool once)
{
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket failed");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) throw std::runtime_error("socket path too long");
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    ::unlink(path.c_str());
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0)
        throw std::runtime_error("cannot listen on " + path + ": " + std::strerror(errno));
    do {
        const int conn = ::accept(fd, nullptr, nullptr);
        if (conn < 0) continue;
        protocol::FdTransport t(conn, conn, true);
        protocol::serve(t, handler);
    } while (!once);
    ::close(fd);
    ::unlink(path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wire-protocol test peer"};
    std::string mode = "echo", unix_path;
    bool once = false;
    app.add_option("--mode", mode, "echo, scale:<s>, dct:<t>, wrong-shape, error, garbage, die, hang");
    app.add_option("--unix", unix_path, "Listen on this unix socket instead of stdio");
    app.add_flag("--once", once, "Exit after the first connection (unix)");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto handler = make_handler(mode);
        if (!unix_path.empty()) return serve_unix(unix_path, handler, once);
        protocol::FdTransport t(0, 1, false);
        protocol::serve(t, handler);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "echo_denoiser: %s\n", e.what());
        return 1;
    }
    return 0;
}
