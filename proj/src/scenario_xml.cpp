#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "sad/error.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

namespace pt = boost::property_tree;

namespace {

constexpr double kGeomTol = 1e-3;

std::string attr(const pt::ptree& node, const std::string& name) {
  auto v = node.get_optional<std::string>("<xmlattr>." + name);
  if (!v) throw SchemaError(name, "missing attribute");
  return *v;
}

double number_at(const pt::ptree& node, const std::string& path) {
  auto v = node.get_optional<double>(path);
  if (!v) throw SchemaError(path, "missing or non-numeric element");
  return *v;
}

// CommonRoad values are either <exact>v</exact> or an interval; intervals
// collapse to their midpoint.
double exact_or_mid(const pt::ptree& node, const std::string& path) {
  if (auto e = node.get_optional<double>(path + ".exact")) return *e;
  auto lo = node.get_optional<double>(path + ".intervalStart");
  auto hi = node.get_optional<double>(path + ".intervalEnd");
  if (lo && hi) return 0.5 * (*lo + *hi);
  throw SchemaError(path, "expected <exact> or <intervalStart>/<intervalEnd>");
}

std::vector<Vec2> polyline(const pt::ptree& bound) {
  std::vector<Vec2> pts;
  for (const auto& [tag, child] : bound) {
    if (tag != "point") continue;
    pts.push_back({number_at(child, "x"), number_at(child, "y")});
  }
  return pts;
}

struct Band {
  std::string id;
  double y_lo, y_hi, x_lo, x_hi;
};

Band lanelet_band(const std::string& id, const pt::ptree& lanelet) {
  auto left = lanelet.get_child_optional("leftBound");
  auto right = lanelet.get_child_optional("rightBound");
  if (!left || !right) throw SchemaError("lanelet " + id, "missing leftBound/rightBound");
  const auto l = polyline(*left);
  const auto r = polyline(*right);
  if (l.size() < 2 || r.size() < 2)
    throw SchemaError("lanelet " + id, "bounds need at least two points");
  auto straight_y = [&](const std::vector<Vec2>& pts) {
    for (const auto& p : pts)
      if (std::abs(p.y - pts.front().y) > kGeomTol)
        throw UnsupportedFeature("lanelet " + id +
                                 " is curved or not aligned with the x axis");
    return pts.front().y;
  };
  const double yl = straight_y(l);
  const double yr = straight_y(r);
  if (std::abs(yl - yr) < kGeomTol) throw SchemaError("lanelet " + id, "zero-width lanelet");
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  for (const auto* pts : {&l, &r})
    for (const auto& p : *pts) {
      x_lo = std::min(x_lo, p.x);
      x_hi = std::max(x_hi, p.x);
    }
  return Band{id, std::min(yl, yr), std::max(yl, yr), x_lo, x_hi};
}

struct RawState {
  double t, x, y, v, psi;
};

RawState read_state(const pt::ptree& st, double native_dt) {
  RawState s;
  s.t = exact_or_mid(st, "time") * native_dt;
  s.x = number_at(st, "position.point.x");
  s.y = number_at(st, "position.point.y");
  s.v = exact_or_mid(st, "velocity");
  s.psi = st.get_child_optional("orientation") ? exact_or_mid(st, "orientation") : 0.0;
  return s;
}

}  // namespace

Scenario import_commonroad_xml(std::string_view text, double target_dt) {
  pt::ptree doc;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw SchemaError("<root>", std::string("XML parse error: ") + e.what());
  }
  auto root_opt = doc.get_child_optional("commonRoad");
  if (!root_opt) throw SchemaError("commonRoad", "missing root element");
  const pt::ptree& root = *root_opt;
  const double native_dt = root.get<double>("<xmlattr>.timeStepSize", 0.1);
  if (!(native_dt > 0.0)) throw SchemaError("timeStepSize", "must be > 0");

  std::vector<Band> bands;
  std::vector<const pt::ptree*> obstacles;
  std::vector<const pt::ptree*> problems;
  for (const auto& [tag, child] : root) {
    if (tag == "lanelet") {
      bands.push_back(lanelet_band(attr(child, "id"), child));
    } else if (tag == "dynamicObstacle") {
      obstacles.push_back(&child);
    } else if (tag == "planningProblem") {
      problems.push_back(&child);
    } else if (tag == "staticObstacle" || tag == "trafficSign" || tag == "trafficLight" ||
               tag == "intersection") {
      throw UnsupportedFeature("<" + tag + "> elements");
    }
  }
  if (bands.size() < 2) throw UnsupportedFeature("fewer than two lanelets");
  if (problems.size() != 1) throw UnsupportedFeature("expected exactly one planning problem");

  // Lateral order defines lane indices; bands must tile the carriageway.
  std::sort(bands.begin(), bands.end(), [](const Band& a, const Band& b) { return a.y_lo < b.y_lo; });
  const double width = bands.front().y_hi - bands.front().y_lo;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& b = bands[i];
    if (std::abs((b.y_hi - b.y_lo) - width) > kGeomTol)
      throw UnsupportedFeature("lanelets of differing widths");
    if (i > 0 && std::abs(b.y_lo - bands[i - 1].y_hi) > kGeomTol)
      throw UnsupportedFeature("lanelets are not laterally adjacent");
    if (std::abs(b.x_lo - bands.front().x_lo) > kGeomTol ||
        std::abs(b.x_hi - bands.front().x_hi) > kGeomTol)
      throw UnsupportedFeature("lanelets with differing longitudinal extents");
  }

  Scenario sc;
  sc.kind = ScenarioKind::RealRoad;
  sc.dt = target_dt;
  sc.id = root.get<std::string>("<xmlattr>.benchmarkID", "commonroad");
  sc.road.lane_count = static_cast<int>(bands.size());
  sc.road.lane_width = width;
  sc.road.origin = {bands.front().x_lo, bands.front().y_lo};
  sc.road.length = bands.front().x_hi - bands.front().x_lo;
  std::map<std::string, int> lane_by_id;
  for (std::size_t i = 0; i < bands.size(); ++i) lane_by_id[bands[i].id] = static_cast<int>(i);

  // Planning problem.
  const pt::ptree& problem = *problems.front();
  auto init = problem.get_child_optional("initialState");
  if (!init) throw SchemaError("planningProblem.initialState", "missing element");
  const RawState ego = read_state(*init, native_dt);
  sc.ego_start.state = VehicleState{ego.x, ego.y, ego.v, 0.0, wrap_angle(ego.psi)};
  const auto ego_lane = lane_of(ego.y, sc.road);
  if (!ego_lane) throw InvariantError("planning problem initial position is off the road");
  sc.ego_start.lane = *ego_lane;

  auto goal_state = problem.get_child_optional("goalState");
  if (!goal_state) throw SchemaError("planningProblem.goalState", "missing element");
  auto goal_end = goal_state->get_optional<double>("time.intervalEnd");
  if (!goal_end) throw SchemaError("goalState.time.intervalEnd", "missing element");
  const double horizon = *goal_end * native_dt;
  sc.duration = std::floor(horizon / target_dt + 1e-9) * target_dt;
  if (!(sc.duration > 0.0)) throw InvariantError("goal time horizon shorter than one step");

  bool have_x_range = false;
  if (auto pos = goal_state->get_child_optional("position")) {
    for (const auto& [tag, child] : *pos) {
      if (tag == "rectangle") {
        if (std::abs(child.get<double>("orientation", 0.0)) > kGeomTol)
          throw UnsupportedFeature("rotated goal rectangle");
        const double cx = number_at(child, "center.x");
        const double cy = number_at(child, "center.y");
        const double len = number_at(child, "length");
        const double wid = number_at(child, "width");
        sc.goal.s_x_min = cx - 0.5 * len;
        sc.goal.s_x_max = cx + 0.5 * len;
        have_x_range = true;
        std::vector<int> lanes;
        for (int l = 0; l < sc.road.lane_count; ++l) {
          const double c = sc.road.centerline_y(l);
          if (c >= cy - 0.5 * wid && c <= cy + 0.5 * wid) lanes.push_back(l);
        }
        if (lanes.empty()) throw InvariantError("goal rectangle covers no lane centerline");
        if (static_cast<int>(lanes.size()) < sc.road.lane_count) sc.goal.allowed_lanes = lanes;
      } else if (tag == "lanelet") {
        const std::string ref = attr(child, "ref");
        auto it = lane_by_id.find(ref);
        if (it == lane_by_id.end()) throw SchemaError("goalState.position.lanelet", "unknown ref " + ref);
        sc.goal.allowed_lanes.push_back(it->second);
      } else if (tag != "<xmlcomment>") {
        throw UnsupportedFeature("goal position shape <" + tag + ">");
      }
    }
  }
  if (!have_x_range) {
    if (sc.goal.allowed_lanes.empty()) throw SchemaError("goalState.position", "missing element");
    sc.goal.s_x_min = sc.road.origin.x;
    sc.goal.s_x_max = sc.road.origin.x + sc.road.length;
  }
  std::sort(sc.goal.allowed_lanes.begin(), sc.goal.allowed_lanes.end());
  sc.goal.allowed_lanes.erase(std::unique(sc.goal.allowed_lanes.begin(), sc.goal.allowed_lanes.end()),
                              sc.goal.allowed_lanes.end());
  if (static_cast<int>(sc.goal.allowed_lanes.size()) == sc.road.lane_count) sc.goal.allowed_lanes.clear();

  // Obstacles, resampled onto the scenario grid.
  const int steps = sc.step_count();
  for (const pt::ptree* obs : obstacles) {
    const std::string id = attr(*obs, "id");
    ChallengerTrack track;
    track.id = id;
    if (!obs->get_child_optional("shape.rectangle"))
      throw UnsupportedFeature("obstacle " + id + " shape is not a rectangle");
    track.length = number_at(*obs, "shape.rectangle.length");
    track.width = number_at(*obs, "shape.rectangle.width");

    std::vector<RawState> raw;
    if (auto st = obs->get_child_optional("initialState")) raw.push_back(read_state(*st, native_dt));
    if (auto traj = obs->get_child_optional("trajectory"))
      for (const auto& [tag, st] : *traj)
        if (tag == "state") raw.push_back(read_state(st, native_dt));
    std::sort(raw.begin(), raw.end(), [](const RawState& a, const RawState& b) { return a.t < b.t; });
    if (raw.size() < 2) throw InvariantError("obstacle " + id + " has fewer than two states");
    if (raw.front().t > 1e-9)
      throw UnsupportedFeature("obstacle " + id + " appears after the initial time step");
    if (raw.back().t < sc.duration - 1e-9)
      throw UnsupportedFeature("obstacle " + id + " track does not cover the scenario horizon");

    std::size_t k = 0;
    for (int j = 0; j <= steps; ++j) {
      const double t = j * target_dt;
      while (k + 2 < raw.size() && raw[k + 1].t <= t + 1e-12) ++k;
      const RawState& a = raw[k];
      const RawState& b = raw[k + 1];
      const double w = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
      TrajectoryPoint p;
      p.t = t;
      p.s_x = a.x + w * (b.x - a.x);
      p.s_y = a.y + w * (b.y - a.y);
      p.v = a.v + w * (b.v - a.v);
      p.psi = wrap_angle(w < 0.5 ? a.psi : b.psi);
      track.points.push_back(p);
    }
    sc.challengers.push_back(std::move(track));
  }

  sc.validate();
  return sc;
}

}  // namespace sad
