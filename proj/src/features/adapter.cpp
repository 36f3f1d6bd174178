#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <mutex>

#include <json.hpp>

#include "gigareg/error.hpp"
#include "gigareg/features.hpp"
#include "gigareg/io.hpp"

namespace gigareg {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::AdapterFailure, msg); }

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

fs::path temp_directory(const AdapterOptions& opt) {
  if (!opt.temp_dir.empty()) return opt.temp_dir;
  if (const char* env = std::getenv("GIGAREG_TMP"); env && *env) return env;
  return fs::temp_directory_path();
}

// Removes the exchanged images when the call ends.
struct TempFiles {
  std::vector<fs::path> paths;
  ~TempFiles() {
    for (const auto& p : paths) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

struct ChildResult {
  int status = 0;
  std::string out;
};

ChildResult run_child(const std::string& cmd, const std::string& input, std::chrono::milliseconds timeout) {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail("pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    fail("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  int wfd = in_pipe[1];
  const int rfd = out_pipe[0];
  ::fcntl(wfd, F_SETFL, O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  ChildResult r;
  std::size_t written = 0;
  if (input.empty()) {
    ::close(wfd);
    wfd = -1;
  }
  bool timed_out = false;
  char buf[65536];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    int nfds = 0;
    fds[nfds++] = {rfd, POLLIN, 0};
    if (wfd >= 0) fds[nfds++] = {wfd, POLLOUT, 0};
    const int pr = ::poll(fds, nfds, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (pr < 0 && errno != EINTR) break;
    if (pr <= 0) continue;
    if (wfd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(wfd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
      if (written == input.size()) {
        ::close(wfd);
        wfd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(rfd, buf, sizeof buf);
      if (n > 0) {
        r.out.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        break;
      }
    }
  }
  if (wfd >= 0) ::close(wfd);
  ::close(rfd);
  if (timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) fail("adapter timed out after " + std::to_string(timeout.count()) + " ms");
  r.status = status;
  return r;
}

double finite_number(const nlohmann::json& m, const char* key) {
  if (!m.contains(key) || !m[key].is_number()) fail(std::string("reply match lacks numeric ") + key);
  const double v = m[key].get<double>();
  if (!std::isfinite(v)) fail(std::string("reply match has non-finite ") + key);
  return v;
}

}  // namespace

MatchSet external_match(const std::string& adapter_cmd, const ImagePlane& src, const ImagePlane& tgt,
                        const AdapterOptions& options) {
  static std::atomic<unsigned long> counter{0};
  const fs::path dir = temp_directory(options);
  const std::string stem = "gigareg_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  TempFiles tmp;
  tmp.paths = {dir / (stem + "_src.png"), dir / (stem + "_tgt.png")};
  try {
    write_png(tmp.paths[0], src);
    write_png(tmp.paths[1], tgt);
  } catch (const Error& e) {
    fail(std::string("cannot write adapter images: ") + e.what());
  }

  nlohmann::ordered_json req;
  req["protocol"] = 1;
  req["src_path"] = tmp.paths[0].string();
  req["tgt_path"] = tmp.paths[1].string();
  req["max_keypoints"] = options.max_keypoints;
  const ChildResult child = run_child(adapter_cmd, req.dump() + "\n", options.timeout);
  if (!WIFEXITED(child.status) || WEXITSTATUS(child.status) != 0)
    fail("adapter exited with status " +
         std::to_string(WIFEXITED(child.status) ? WEXITSTATUS(child.status) : -1));

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(child.out);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed adapter reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("backend") || !reply["backend"].is_string() ||
      !reply.contains("matches") || !reply["matches"].is_array())
    fail("adapter reply lacks backend or matches");

  MatchSet ms;
  ms.backend_id = reply["backend"].get<std::string>();
  if (reply.contains("descriptor_dim") && reply["descriptor_dim"].is_number_integer())
    ms.descriptor_dim = reply["descriptor_dim"].get<int>();
  auto inside = [](double x, double y, const ImagePlane& p) {
    return x >= 0.0 && y >= 0.0 && x <= p.width() && y <= p.height();
  };
  for (const auto& m : reply["matches"]) {
    if (!m.is_object()) fail("reply match is not an object");
    Match mt;
    mt.source.x = finite_number(m, "sx");
    mt.source.y = finite_number(m, "sy");
    mt.target.x = finite_number(m, "tx");
    mt.target.y = finite_number(m, "ty");
    mt.confidence = finite_number(m, "conf");
    if (mt.confidence < 0.0 || mt.confidence > 1.0) fail("reply confidence outside [0, 1]");
    if (!inside(mt.source.x, mt.source.y, src) || !inside(mt.target.x, mt.target.y, tgt))
      fail("reply coordinates outside the images");
    mt.source.score = mt.target.score = mt.confidence;
    ms.matches.push_back(mt);
  }
  return ms;
}

}  // namespace gigareg
