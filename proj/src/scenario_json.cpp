#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sad/error.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace {

ordered_json state_to_json(const VehicleState& s) {
  return ordered_json{{"s_x", s.s_x}, {"s_y", s.s_y}, {"v", s.v}, {"delta", s.delta}, {"psi", s.psi}};
}

ordered_json params_to_json(const VehicleParams& p) {
  return ordered_json{{"length", p.length},       {"width", p.width},
                      {"wheelbase", p.wheelbase}, {"a_min", p.a_min},
                      {"a_max", p.a_max},         {"delta_max", p.delta_max},
                      {"vdelta_max", p.vdelta_max}, {"v_max", p.v_max}};
}

// Field access with path-qualified schema errors.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected object");
  }

  const json& at(const char* key) const {
    auto it = node_.find(key);
    if (it == node_.end()) throw SchemaError(child(key), "missing field");
    return *it;
  }
  bool has(const char* key) const { return node_.contains(key); }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw SchemaError(child(key), "expected number");
    return v.get<double>();
  }
  int integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw SchemaError(child(key), "expected integer");
    return v.get<int>();
  }
  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw SchemaError(child(key), "expected string");
    return v.get<std::string>();
  }
  Reader object(const char* key) const { return Reader(at(key), child(key)); }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
};

VehicleState read_state(const Reader& r) {
  return VehicleState{r.number("s_x"), r.number("s_y"), r.number("v"), r.number("delta"),
                      r.number("psi")};
}

VehicleParams read_params(const Reader& r) {
  VehicleParams p;
  p.length = r.number("length");
  p.width = r.number("width");
  p.wheelbase = r.number("wheelbase");
  p.a_min = r.number("a_min");
  p.a_max = r.number("a_max");
  p.delta_max = r.number("delta_max");
  p.vdelta_max = r.number("vdelta_max");
  p.v_max = r.number("v_max");
  return p;
}

}  // namespace

std::string save_json(const Scenario& sc) {
  ordered_json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["id"] = sc.id;
  doc["kind"] = std::string(to_string(sc.kind));
  doc["dt"] = sc.dt;
  doc["duration"] = sc.duration;
  doc["road"] = ordered_json{{"lane_count", sc.road.lane_count},
                             {"lane_width", sc.road.lane_width},
                             {"length", sc.road.length},
                             {"origin", {sc.road.origin.x, sc.road.origin.y}}};
  doc["ego_start"] = ordered_json{{"state", state_to_json(sc.ego_start.state)},
                                  {"lane", sc.ego_start.lane}};
  doc["ego_params"] = params_to_json(sc.ego_params);
  ordered_json goal{{"s_x_min", sc.goal.s_x_min}, {"s_x_max", sc.goal.s_x_max}};
  if (sc.goal.any_lane())
    goal["allowed_lanes"] = "any";
  else
    goal["allowed_lanes"] = sc.goal.allowed_lanes;
  doc["goal"] = goal;
  ordered_json tracks = ordered_json::array();
  for (const auto& tr : sc.challengers) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : tr.points) pts.push_back({p.t, p.s_x, p.s_y, p.v, p.psi});
    tracks.push_back(ordered_json{
        {"id", tr.id}, {"length", tr.length}, {"width", tr.width}, {"points", pts}});
  }
  doc["challengers"] = tracks;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : sc.meta) meta[k] = v;
  doc["meta"] = meta;
  return doc.dump(1) + "\n";
}

Scenario load_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("parse error: ") + e.what());
  }
  const Reader root(doc, "");
  const int version = root.integer("schema_version");
  if (version != kScenarioSchemaVersion)
    throw SchemaError("schema_version", "unsupported version " + std::to_string(version));

  Scenario sc;
  sc.id = root.string("id");
  const auto kind = parse_kind(root.string("kind"));
  if (!kind) throw SchemaError("kind", "unknown scenario kind");
  sc.kind = *kind;
  sc.dt = root.number("dt");
  sc.duration = root.number("duration");

  const Reader road = root.object("road");
  sc.road.lane_count = road.integer("lane_count");
  sc.road.lane_width = road.number("lane_width");
  sc.road.length = road.number("length");
  const json& origin = road.at("origin");
  if (!origin.is_array() || origin.size() != 2 || !origin[0].is_number() || !origin[1].is_number())
    throw SchemaError("road.origin", "expected [x, y]");
  sc.road.origin = {origin[0].get<double>(), origin[1].get<double>()};

  const Reader ego = root.object("ego_start");
  sc.ego_start.state = read_state(ego.object("state"));
  sc.ego_start.lane = ego.integer("lane");
  sc.ego_params = read_params(root.object("ego_params"));

  const Reader goal = root.object("goal");
  sc.goal.s_x_min = goal.number("s_x_min");
  sc.goal.s_x_max = goal.number("s_x_max");
  const json& lanes = goal.at("allowed_lanes");
  if (lanes.is_string()) {
    if (lanes.get<std::string>() != "any")
      throw SchemaError("goal.allowed_lanes", "expected \"any\" or a list of lane indices");
  } else if (lanes.is_array()) {
    for (const auto& l : lanes) {
      if (!l.is_number_integer()) throw SchemaError("goal.allowed_lanes", "expected integers");
      sc.goal.allowed_lanes.push_back(l.get<int>());
    }
    if (sc.goal.allowed_lanes.empty())
      throw SchemaError("goal.allowed_lanes", "empty list; use \"any\"");
  } else {
    throw SchemaError("goal.allowed_lanes", "expected \"any\" or a list of lane indices");
  }

  const json& tracks = root.at("challengers");
  if (!tracks.is_array()) throw SchemaError("challengers", "expected array");
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const std::string base = "challengers[" + std::to_string(i) + "]";
    const Reader tr(tracks[i], base);
    ChallengerTrack track;
    track.id = tr.string("id");
    track.length = tr.number("length");
    track.width = tr.number("width");
    const json& pts = tr.at("points");
    if (!pts.is_array()) throw SchemaError(base + ".points", "expected array");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const json& p = pts[k];
      if (!p.is_array() || p.size() != 5)
        throw SchemaError(base + ".points[" + std::to_string(k) + "]",
                          "expected [t, s_x, s_y, v, psi]");
      for (const auto& f : p)
        if (!f.is_number())
          throw SchemaError(base + ".points[" + std::to_string(k) + "]", "expected numbers");
      track.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>(),
                              p[3].get<double>(), p[4].get<double>()});
    }
    sc.challengers.push_back(std::move(track));
  }

  if (root.has("meta")) {
    const json& meta = root.at("meta");
    if (!meta.is_object()) throw SchemaError("meta", "expected object");
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      if (!it->is_number()) throw SchemaError("meta." + it.key(), "expected number");
      sc.meta[it.key()] = it->get<double>();
    }
  }

  sc.validate();
  return sc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".xml") return import_commonroad_xml(text);
  return load_json(text);
}

void write_scenario_file(const std::filesystem::path& path, const Scenario& scenario) {
  write_text_file(path, save_json(scenario));
}

}  // namespace sad
