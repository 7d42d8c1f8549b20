#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sad/env.hpp"

namespace sad {

inline constexpr int kProtocolVersion = 1;

// Scenarios a server can hand out, addressed by id. Immutable once built and
// shared by all sessions.
class ScenarioCatalog {
 public:
  void add(std::shared_ptr<const Scenario> sc);
  std::shared_ptr<const Scenario> find(const std::string& id) const;
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

 private:
  std::map<std::string, std::shared_ptr<const Scenario>> by_id_;
  std::vector<std::string> ids_;
};

// One client session: newline-delimited JSON requests, one response line per
// request. Errors never end the session.
class Session {
 public:
  Session(std::shared_ptr<const ScenarioCatalog> catalog, EnvConfig cfg);

  // `line` without its newline; returns the response without a newline.
  std::string handle(std::string_view line);
  bool closed() const { return closed_; }

 private:
  std::shared_ptr<const ScenarioCatalog> catalog_;
  Env env_;
  bool closed_ = false;
};

// Reads requests from in until EOF or a close command.
void serve_stream(std::istream& in, std::ostream& out, std::shared_ptr<const ScenarioCatalog> catalog,
                  const EnvConfig& cfg);

// Listens on 127.0.0.1:port (0 picks a free port), one thread per
// connection. on_listen receives the bound port. Returns once stop is set
// and running sessions have finished; throws std::runtime_error on socket
// failures.
void serve_tcp(std::uint16_t port, std::shared_ptr<const ScenarioCatalog> catalog, const EnvConfig& cfg,
               const std::atomic<bool>& stop, const std::function<void(std::uint16_t)>& on_listen = {});

}  // namespace sad
