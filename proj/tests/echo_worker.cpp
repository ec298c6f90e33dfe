// Minimal NDJSON worker used by the protocol tests.
//
//   echo_worker [mode]
//
// Modes: echo (default), bad-protocol, short, bad-id, malformed, slow,
// exit-after-hello, error. In echo mode edit requests are answered with
// n_candidates copies of the current sequence and eval requests with 0.5
// per sequence. `--tcp` serves a single TCP connection on an ephemeral
// loopback port instead of stdio, announcing "listening <port>" on stdout.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"

using json = nlohmann::json;

namespace {

using Next = std::function<bool(std::string&)>;
using Emit = std::function<void(const std::string&)>;

int run(const Next& next, const Emit& emit, const std::string& mode) {
  std::string line;
  while (next(line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error&) {
      emit(json{{"error", "malformed input"}}.dump());
      continue;
    }
    const auto type = msg.value("type", "");
    if (type == "shutdown") return 0;
    if (type == "hello") {
      emit(json{{"type", "hello"}, {"protocol", mode == "bad-protocol" ? 2 : 1}, {"roles", msg["roles"]}}.dump());
      if (mode == "exit-after-hello") return 0;
      continue;
    }
    json reply{{"id", msg.value("id", 0ull) + (mode == "bad-id" ? 1 : 0)}};
    if (mode == "malformed") {
      emit("{\"id\": oops");
      continue;
    }
    if (mode == "slow") std::this_thread::sleep_for(std::chrono::seconds(3));
    if (mode == "error") {
      reply["error"] = "cannot serve";
    } else if (type == "edit") {
      std::size_t n = msg.at("n_candidates").get<std::size_t>();
      if (mode == "short") --n;
      reply["candidates"] = std::vector<std::string>(n, msg.at("current").at("seq").get<std::string>());
    } else if (type == "eval") {
      std::size_t n = msg.at("sequences").size();
      if (mode == "short") --n;
      reply["values"] = std::vector<double>(n, 0.5);
    } else {
      reply["error"] = "unknown request type";
    }
    emit(reply.dump());
  }
  return 0;
}

// Serves one TCP client on 127.0.0.1.
int serve_tcp(const std::string& mode) {
  const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  int yes = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(srv, 1) != 0) {
    std::perror("bind");
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
  std::cout << "listening " << ntohs(addr.sin_port) << std::endl;
  const int fd = ::accept(srv, nullptr, nullptr);
  ::close(srv);
  if (fd < 0) return 1;
  FILE* rf = ::fdopen(fd, "r");
  const auto next = [&](std::string& line) {
    line.clear();
    int c;
    while ((c = std::fgetc(rf)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    return c != EOF || !line.empty();
  };
  const auto emit = [&](const std::string& s) {
    const std::string data = s + "\n";
    (void)!::write(fd, data.data(), data.size());
  };
  const int rc = run(next, emit, mode);
  std::fclose(rf);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "echo";
  bool tcp = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--tcp") {
      tcp = true;
    } else {
      mode = a;
    }
  }
  if (tcp) return serve_tcp(mode);
  const auto next = [](std::string& line) { return static_cast<bool>(std::getline(std::cin, line)); };
  const auto emit = [](const std::string& s) { std::cout << s << '\n' << std::flush; };
  return run(next, emit, mode);
}
