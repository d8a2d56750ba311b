#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

// RDN1 wire format, little-endian:
//   "RDN1" | u32 width | u32 height | u32 channels | f32 sigma | f32 samples...
namespace rdn {

inline constexpr std::array<char, 4> kMagic{'R', 'D', 'N', '1'};
inline constexpr std::size_t kHeaderSize = 4 + 4 * 3 + 4;

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

struct Message {
  Image image;
  float sigma = 0.0f;
};

inline std::vector<std::uint8_t> encode(const Image& img, float sigma) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * img.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, static_cast<std::uint32_t>(img.channels()));
  put_f32(out, sigma);
  for (double v : img.data()) put_f32(out, static_cast<float>(v));
  return out;
}

inline Message decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw ExternalDenoiserError("RDN1: truncated header");
  if (std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw ExternalDenoiserError("RDN1: malformed header (bad magic)");
  }
  const std::uint32_t w = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t c = get_u32(bytes.data() + 12);
  if (w == 0 || h == 0 || (c != 1 && c != 3)) {
    throw ExternalDenoiserError("RDN1: malformed header (bad dimensions)");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() != kHeaderSize + 4 * n) {
    throw ExternalDenoiserError("RDN1: truncated payload (expected " +
                                std::to_string(kHeaderSize + 4 * n) + " bytes, got " +
                                std::to_string(bytes.size()) + ")");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = get_f32(bytes.data() + kHeaderSize + 4 * i);
  return {Image(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), std::move(data)),
          get_f32(bytes.data() + 16)};
}

}  // namespace rdn

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::vector<std::uint8_t> out;
  std::string err;
};

namespace detail {

inline void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

inline void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace detail

// Runs `command` through /bin/sh, feeding `input` on stdin and collecting
// stdout/stderr until the child exits or the timeout expires.
inline ProcessResult run_process(const std::string& command, const std::vector<std::uint8_t>& input,
                                 double timeout_seconds) {
  detail::ignore_sigpipe_once();
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe(in_pipe) != 0) throw ExternalDenoiserError("pipe() failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ExternalDenoiserError("pipe() failed");
  }
  if (::pipe(err_pipe) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw ExternalDenoiserError("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
      ::close(fd);
    throw ExternalDenoiserError("fork() failed");
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
      ::close(fd);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  int to_child = in_pipe[1];
  int from_child = out_pipe[0];
  int err_child = err_pipe[0];
  for (int fd : {to_child, from_child, err_child}) ::fcntl(fd, F_SETFL, O_NONBLOCK);

  ProcessResult result;
  std::size_t written = 0;
  if (input.empty()) detail::close_fd(to_child);
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  std::array<std::uint8_t, 65536> buf;

  while (from_child >= 0 || err_child >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    const int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);
    std::vector<pollfd> fds;
    if (to_child >= 0) fds.push_back({to_child, POLLOUT, 0});
    if (from_child >= 0) fds.push_back({from_child, POLLIN, 0});
    if (err_child >= 0) fds.push_back({err_child, POLLIN, 0});
    const int ready = ::poll(fds.data(), fds.size(), wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == to_child) {
        if (p.revents & (POLLERR | POLLHUP)) {
          detail::close_fd(to_child);
          continue;
        }
        const ssize_t n = ::write(to_child, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN) || written == input.size()) detail::close_fd(to_child);
      } else {
        const ssize_t n = ::read(p.fd, buf.data(), buf.size());
        if (n > 0) {
          if (p.fd == from_child)
            result.out.insert(result.out.end(), buf.begin(), buf.begin() + n);
          else
            result.err.append(reinterpret_cast<const char*>(buf.data()), static_cast<std::size_t>(n));
        } else if (n == 0 || errno != EAGAIN) {
          if (p.fd == from_child)
            detail::close_fd(from_child);
          else
            detail::close_fd(err_child);
        }
      }
    }
  }
  detail::close_fd(to_child);
  detail::close_fd(from_child);
  detail::close_fd(err_child);
  if (result.timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

// One denoising call through an out-of-process filter speaking RDN1.
inline Image external_denoise(const std::string& command, const Image& x, double sigma,
                              double timeout_seconds = 60.0) {
  const auto request = rdn::encode(x, static_cast<float>(sigma));
  const ProcessResult proc = run_process(command, request, timeout_seconds);
  if (proc.timed_out) {
    throw ExternalDenoiserError("external denoiser timed out after " +
                                std::to_string(timeout_seconds) + " s");
  }
  if (proc.exit_code != 0) {
    throw ExternalDenoiserError("external denoiser failed (exit code " +
                                std::to_string(proc.exit_code) + "): " + proc.err);
  }
  rdn::Message reply = rdn::decode(proc.out);
  if (!reply.image.same_shape(x)) {
    throw ExternalDenoiserError("external denoiser: dimension mismatch (sent " + x.shape_string() +
                                ", received " + reply.image.shape_string() + ")");
  }
  if (!all_finite(reply.image.samples())) {
    throw ExternalDenoiserError("external denoiser returned non-finite samples");
  }
  return std::move(reply.image);
}

}  // namespace facehal
