#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "core/errors.hpp"
#include "segment/provider.hpp"

namespace urbanfield::seg {

using nlohmann::json;

namespace {

[[noreturn]] void provider_error(const std::string& what, const std::string& payload = {}) {
    fail(ErrorCode::Provider, payload.empty() ? what : what + "; payload: " + payload);
}

}  // namespace

ProcessProvider::ProcessProvider(std::vector<std::string> argv, ProcessOptions options)
    : argv_(std::move(argv)), options_(options) {
    if (argv_.empty()) invalid_argument("provider command is empty");
    char tmpl[] = "/tmp/urbanfield-provider-XXXXXX";
    if (!::mkdtemp(tmpl)) fail(ErrorCode::Io, "cannot create provider staging directory");
    temp_dir_ = tmpl;
    try {
        spawn();
        // Providers without a handshake answer with an error; dim is then learned lazily.
        const auto reply = request(json{{"op", "handshake"}}.dump());
        const auto j = json::parse(reply, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("dim") && j["dim"].is_number_unsigned()) {
            dim_ = j["dim"].get<std::size_t>();
        }
    } catch (...) {
        terminate();
        std::error_code ec;
        std::filesystem::remove_all(temp_dir_, ec);
        throw;
    }
}

ProcessProvider::~ProcessProvider() {
    terminate();
    std::error_code ec;
    std::filesystem::remove_all(temp_dir_, ec);
}

void ProcessProvider::spawn() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
        provider_error(std::string("socketpair failed: ") + std::strerror(errno));
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        provider_error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(fds[1], STDIN_FILENO);
        ::dup2(fds[1], STDOUT_FILENO);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(fds[1]);
    pid_ = pid;
    to_child_ = from_child_ = fds[0];
}

void ProcessProvider::terminate() {
    if (to_child_ >= 0) {
        ::shutdown(to_child_, SHUT_RDWR);
        ::close(to_child_);
    }
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        // Give the child a moment to exit on EOF before killing it.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(2000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

std::string ProcessProvider::request(const std::string& line) {
    std::lock_guard lock(mutex_);
    if (to_child_ < 0) provider_error("provider process is not running");
    const std::string out = line + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
        const auto n = ::send(to_child_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            terminate();
            provider_error("provider process closed its input", line);
        }
        sent += static_cast<std::size_t>(n);
    }
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    for (;;) {
        if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
            std::string reply = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            const std::string partial = pending_;
            terminate();
            provider_error("provider timed out", partial.empty() ? line : partial);
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) continue;
        char buf[65536];
        const auto n = ::recv(from_child_, buf, sizeof(buf), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            const std::string partial = pending_;
            terminate();
            provider_error("provider process exited", partial);
        }
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

std::vector<float> ProcessProvider::parse_embedding(const std::string& reply) {
    const auto j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) provider_error("malformed provider reply", reply);
    if (j.contains("error")) provider_error("provider reported an error", reply);
    if (!j.contains("embedding") || !j["embedding"].is_array()) {
        provider_error("provider reply lacks an embedding", reply);
    }
    std::vector<float> v;
    for (const auto& x : j["embedding"]) {
        if (!x.is_number()) provider_error("non-numeric embedding component", reply);
        v.push_back(x.get<float>());
    }
    if (v.empty()) provider_error("empty embedding", reply);
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
        provider_error("embedding has " + std::to_string(v.size()) + " components, expected " +
                           std::to_string(dim_),
                       reply);
    }
    try {
        normalize_in_place(v);
    } catch (const Error&) {
        provider_error("zero or non-finite embedding", reply);
    }
    return v;
}

std::string ProcessProvider::stage_image(const RgbImage& image) {
    const auto path = std::filesystem::path(temp_dir_) / ("img" + std::to_string(staged_++ % 4) + ".png");
    write_image(image, path);
    return path.string();
}

std::vector<float> ProcessProvider::embed_text(std::string_view text) {
    return parse_embedding(request(json{{"op", "embed_text"}, {"text", text}}.dump()));
}

std::vector<float> ProcessProvider::embed_image(const RgbImage& image) {
    return parse_embedding(request(json{{"op", "embed_image"}, {"path", stage_image(image)}}.dump()));
}

double ProcessProvider::score_image(const RgbImage& image, std::string_view prompt) {
    const auto reply =
        request(json{{"op", "score_image"}, {"path", stage_image(image)}, {"prompt", prompt}}.dump());
    const auto j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) provider_error("malformed provider reply", reply);
    if (j.contains("error")) provider_error("provider reported an error", reply);
    if (!j.contains("score") || !j["score"].is_number()) provider_error("provider reply lacks a score", reply);
    const double s = j["score"].get<double>();
    if (!std::isfinite(s)) provider_error("non-finite score", reply);
    return std::clamp(s, 0.0, 10.0);
}

std::unique_ptr<Provider> open_provider(const std::string& spec, ProcessOptions options) {
    if (spec == "stub") return std::make_unique<StubProvider>();
    if (spec.rfind("cmd:", 0) == 0) {
        std::istringstream in(spec.substr(4));
        std::vector<std::string> argv;
        for (std::string arg; in >> arg;) argv.push_back(arg);
        return std::make_unique<ProcessProvider>(std::move(argv), options);
    }
    invalid_argument("unknown provider \"" + spec + "\" (expected stub or cmd:<argv>)");
}

}  // namespace urbanfield::seg
