#include "sad/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "sad/error.hpp"

namespace sad {

using nlohmann::ordered_json;

void ScenarioCatalog::add(std::shared_ptr<const Scenario> sc) {
  if (!sc) throw std::invalid_argument("catalog: null scenario");
  if (by_id_.count(sc->id)) throw InvariantError("catalog: duplicate scenario id '" + sc->id + "'");
  ids_.push_back(sc->id);
  by_id_.emplace(sc->id, std::move(sc));
}

std::shared_ptr<const Scenario> ScenarioCatalog::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : it->second;
}

namespace {

std::string error(std::string_view code, std::string_view detail = {}) {
  ordered_json j{{"ok", false}, {"error", code}};
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

EnvConfig session_config(EnvConfig cfg) {
  cfg.record_trace = true;
  return cfg;
}

}  // namespace

Session::Session(std::shared_ptr<const ScenarioCatalog> catalog, EnvConfig cfg)
    : catalog_(std::move(catalog)), env_(session_config(cfg)) {}

std::string Session::handle(std::string_view line) {
  ordered_json req;
  try {
    req = ordered_json::parse(line);
  } catch (const nlohmann::json::exception&) {
    return error("bad_json");
  }
  if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) return error("bad_request", "missing cmd");
  const std::string cmd = req["cmd"].get<std::string>();
  const auto& cfg = env_.config();
  const bool continuous = cfg.mode == ActionMode::Continuous;

  if (cmd == "hello") {
    ordered_json j{{"ok", true},
                   {"protocol", kProtocolVersion},
                   {"mode", continuous ? "continuous" : "hierarchical"},
                   {"obs_dim", Observation::kDim}};
    if (continuous) {
      const VehicleParams p;
      j["action"] = {{"type", "box"}, {"low", {p.a_min, -p.vdelta_max}}, {"high", {p.a_max, p.vdelta_max}}};
    } else {
      j["action"] = {{"type", "multi_discrete"}, {"nvec", {kLateralCount, kLongitudinalCount}}};
    }
    j["scenarios"] = catalog_->size();
    return j.dump();
  }
  if (cmd == "list") return ordered_json{{"ok", true}, {"scenarios", catalog_->ids()}}.dump();
  if (cmd == "close") {
    closed_ = true;
    return ordered_json{{"ok", true}}.dump();
  }
  if (cmd == "reset") {
    std::uint64_t seed = 0;
    if (req.contains("seed")) {
      if (!req["seed"].is_number_unsigned()) return error("bad_request", "seed must be a non-negative integer");
      seed = req["seed"].get<std::uint64_t>();
    }
    std::shared_ptr<const Scenario> sc;
    if (req.contains("scenario")) {
      if (!req["scenario"].is_string()) return error("bad_request", "scenario must be a string");
      sc = catalog_->find(req["scenario"].get<std::string>());
      if (!sc) return error("unknown_scenario");
    } else {
      if (catalog_->size() == 0) return error("unknown_scenario");
      sc = catalog_->find(catalog_->ids()[seed % catalog_->size()]);
    }
    try {
      const auto obs = env_.reset(sc, seed);
      return ordered_json{{"ok", true}, {"scenario", sc->id}, {"obs", obs.scaled(cfg.scaling)}}.dump();
    } catch (const std::exception& e) {
      return error("invalid_scenario", e.what());
    }
  }
  if (cmd == "step") {
    if (!env_.has_episode()) return error("no_episode");
    if (env_.terminated()) return error("episode_done");
    if (!req.contains("action") || !req["action"].is_array() || req["action"].size() != 2)
      return error("bad_action", "expected a 2-element array");
    const auto& a = req["action"];
    StepOutcome res;
    if (!continuous) {
      if (!a[0].is_number_integer() || !a[1].is_number_integer()) return error("bad_action", "expected integers");
      const int lat = a[0].get<int>();
      const int lon = a[1].get<int>();
      if (lat < 0 || lat >= kLateralCount || lon < 0 || lon >= kLongitudinalCount)
        return error("bad_action", "index out of range");
      res = env_.step(HighLevelAction::from_indices(lat, lon));
    } else {
      if (!a[0].is_number() || !a[1].is_number()) return error("bad_action", "expected numbers");
      const double acc = a[0].get<double>();
      const double sr = a[1].get<double>();
      if (!std::isfinite(acc) || !std::isfinite(sr)) return error("bad_action", "non-finite value");
      res = env_.step_continuous(acc, sr);
    }
    ordered_json j{{"ok", true}, {"obs", res.obs.scaled(cfg.scaling)}, {"reward", res.reward},
                   {"terminated", res.terminated}};
    j["reason"] = res.reason ? ordered_json(std::string(to_string(*res.reason))) : ordered_json(nullptr);
    j["info"] = {{"t", res.info.t},
                 {"shield_overridden", res.info.shield_overridden},
                 {"shield_reason", std::string(to_string(res.info.shield_reason))}};
    return j.dump();
  }
  if (cmd == "trace") {
    if (!env_.has_episode()) return error("no_episode");
    ordered_json records = ordered_json::array();
    std::istringstream is(trace_to_jsonl(env_.trace()));
    std::string rec;
    while (std::getline(is, rec)) records.push_back(ordered_json::parse(rec));
    return ordered_json{{"ok", true}, {"trace", records}}.dump();
  }
  return error("unknown_cmd");
}

void serve_stream(std::istream& in, std::ostream& out, std::shared_ptr<const ScenarioCatalog> catalog,
                  const EnvConfig& cfg) {
  Session s(std::move(catalog), cfg);
  std::string line;
  while (!s.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out << s.handle(line) << '\n';
    out.flush();
  }
}

namespace {

void run_connection(int fd, std::shared_ptr<const ScenarioCatalog> catalog, EnvConfig cfg,
                    const std::atomic<bool>& stop) {
  Session s(std::move(catalog), cfg);
  std::string buf;
  char chunk[4096];
  while (!s.closed() && !stop.load()) {
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r < 0 && errno != EINTR) break;
    if (r <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (!s.closed() && (nl = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const std::string reply = s.handle(line) + "\n";
      std::size_t off = 0;
      while (off < reply.size()) {
        const ssize_t w = ::send(fd, reply.data() + off, reply.size() - off, MSG_NOSIGNAL);
        if (w <= 0) {
          ::close(fd);
          return;
        }
        off += static_cast<std::size_t>(w);
      }
    }
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(std::uint16_t port, std::shared_ptr<const ScenarioCatalog> catalog, const EnvConfig& cfg,
               const std::atomic<bool>& stop, const std::function<void(std::uint16_t)>& on_listen) {
  const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(lfd, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(lfd);
    throw std::runtime_error("bind/listen on port " + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  std::vector<std::thread> sessions;
  while (!stop.load()) {
    pollfd p{lfd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r < 0 && errno != EINTR) break;
    if (r <= 0) continue;
    const int fd = ::accept(lfd, nullptr, nullptr);
    if (fd < 0) continue;
    sessions.emplace_back(run_connection, fd, catalog, cfg, std::cref(stop));
  }
  ::close(lfd);
  for (auto& t : sessions) t.join();
}

}  // namespace sad
