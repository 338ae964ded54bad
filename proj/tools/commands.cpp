#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "conicam/conicam.hpp"
#include "svg.hpp"

namespace conicam::cli {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double round3(double v) {
  const double r = std::round(v * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;
}

// ---------------------------------------------------------------------------
// JSON access with named schema errors

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError("missing field '" + path + "'");
  }
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("field '" + path + "' must be a number");
  return j.get<double>();
}

HomPoint point_value(const json& j, const std::string& path) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3)) {
    throw SchemaError("field '" + path + "' must be [x, y] or [x, y, w]");
  }
  Vec3 v(number(j[0], path), number(j[1], path),
         j.size() == 3 ? number(j[2], path) : 1.0);
  try {
    return HomPoint(v);
  } catch (const Error&) {
    throw SchemaError("field '" + path + "' is the zero vector");
  }
}

Vec2 finite_point(const json& j, const std::string& path) {
  const HomPoint p = point_value(j, path);
  if (!is_finite(p)) {
    throw DegenerateError("field '" + path + "' is a point at infinity");
  }
  return euclidean(p);
}

HomLine line_value(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw SchemaError("field '" + path + "' must be [a, b, c]");
  }
  Vec3 v(number(j[0], path), number(j[1], path), number(j[2], path));
  try {
    return HomLine(v);
  } catch (const Error&) {
    throw SchemaError("field '" + path + "' is the zero vector");
  }
}

// A point reference is either a name under "points" or inline coordinates.
HomPoint resolve_point(const json& ann, const json& ref, const std::string& path) {
  if (ref.is_string()) {
    const std::string name = ref.get<std::string>();
    const json& pts = field(ann, "points", "points");
    return point_value(field(pts, name, "points." + name), "points." + name);
  }
  return point_value(ref, path);
}

struct ImageSize {
  double width;
  double height;
};

ImageSize image_size(const json& doc) {
  const json& img = field(doc, "image", "image");
  ImageSize s{number(field(img, "width", "image.width"), "image.width"),
              number(field(img, "height", "image.height"), "image.height")};
  if (!(s.width > 0.0) || !(s.height > 0.0)) {
    throw SchemaError("field 'image' must have positive width and height");
  }
  return s;
}

Vec2 principal_point(const json& ann, const ImageSize& img) {
  if (ann.contains("points") && ann.at("points").contains("principal_point")) {
    return finite_point(ann.at("points").at("principal_point"),
                        "points.principal_point");
  }
  return {0.5 * img.width, 0.5 * img.height};
}

std::optional<HomLine> annotated_horizon(const json& ann) {
  if (ann.contains("lines") && ann.at("lines").contains("horizon")) {
    return orient_horizon_upright(
        line_value(ann.at("lines").at("horizon"), "lines.horizon"));
  }
  return std::nullopt;
}

HomPoint named_vp(const json& ann, const std::string& name) {
  const json& pts = field(ann, "points", "points");
  return point_value(field(pts, name, "points." + name), "points." + name);
}

json to_json(const Vec2& p) { return json::array({p.x(), p.y()}); }

json to_json(const HomLine& l) {
  const Vec3 v = l.vec().normalized();
  return json::array({v.x(), v.y(), v.z()});
}

const char* branch_name(Branch b) { return b == Branch::above ? "above" : "below"; }

json conformal_json(const ConformalPoint& cp) {
  const Vec2 x = cp.position();
  return {{"position", to_json(x)},
          {"branch", branch_name(cp.branch)},
          {"distance", std::abs(signed_distance(x, cp.horizon))}};
}

json conic_json(const CalibratingConic& c, double radius) {
  const auto k = c.conic.normalized().coefficients();
  return {{"coefficients", json::array({k[0], k[1], k[2], k[3], k[4], k[5]})},
          {"centre", to_json(euclidean(c.centre))},
          {"radius", radius}};
}

CalibrationMatrix camera_from_json(const json& cam, const std::string& path) {
  const Vec2 p = finite_point(field(cam, "principal_point", path + ".principal_point"),
                              path + ".principal_point");
  if (cam.contains("focal")) {
    return CalibrationMatrix::square(number(cam.at("focal"), path + ".focal"),
                                     p.x(), p.y());
  }
  const double fx = number(field(cam, "fx", path + ".focal"), path + ".fx");
  const double fy = cam.contains("fy") ? number(cam.at("fy"), path + ".fy") : fx;
  const double skew = cam.contains("skew") ? number(cam.at("skew"), path + ".skew") : 0.0;
  return {fx, fy, skew, p.x(), p.y()};
}

json camera_json(const CalibrationMatrix& k) {
  return {{"fx", k.fx()},
          {"fy", k.fy()},
          {"skew", k.skew()},
          {"principal_point", to_json(k.principal_point())}};
}

class Construction {
 public:
  void point(const std::string& name, const Vec2& p) { points_[name] = to_json(p); }
  void segment(const std::string& a, const std::string& b) {
    segments_.push_back(json::array({a, b}));
  }
  bool empty() const { return points_.empty(); }
  json to_json_value() const {
    return {{"points", points_}, {"segments", segments_}};
  }

 private:
  json points_ = json::object();
  json segments_ = json::array();
};

void add_polar_construction(const ReflectedPolarFocal& r, const Vec2& a,
                            const Vec2& b, const Vec2& p, json& inter,
                            Construction& con) {
  inter["x"] = r.x;
  inter["h"] = r.h;
  con.point("P", p);
  con.point("A", a);
  con.point("B", b);
  con.point("A'", r.a_reflected);
  con.point("D", r.d);
  con.segment("P", "A");
  con.segment("P", "D");
  con.segment("B", "D");
}

void add_conformal_construction(const ConformalFocal& c, const Vec2& a,
                                const Vec2& b, const Vec2& p, json& inter,
                                Construction& con) {
  inter["a"] = c.a;
  inter["b"] = c.b;
  inter["d"] = c.d;
  inter["s"] = c.s;
  con.point("P", p);
  con.point("A", a);
  con.point("B", b);
  con.point("O", c.o);
  con.point("C", c.conformal_point.position());
  con.segment("A", "B");
  con.segment("P", "O");
  con.segment("O", "C");
}

// ---------------------------------------------------------------------------
// Calibration

struct Calibration {
  json report;
  CalibrationMatrix k;
  std::optional<HomLine> horizon;
};

Calibration run_calibration(const json& ann, const std::string& method) {
  const ImageSize img = image_size(ann);
  const Vec2 p = principal_point(ann, img);
  std::optional<HomLine> horizon = annotated_horizon(ann);

  json report;
  report["method"] = method;
  report["image"] = {{"width", img.width}, {"height", img.height}};
  json inter = json::object();
  Construction con;
  double f = 0.0;
  Vec2 centre = p;

  if (method == "three-vp") {
    const HomPoint v1 = named_vp(ann, "vp1");
    const HomPoint v2 = named_vp(ann, "vp2");
    const HomPoint v3 = named_vp(ann, "vp3");
    const ThreeVpCalibration t = conic_from_three_orthogonal_vps(v1, v2, v3);
    f = t.focal;
    centre = t.principal_point;
    report["ill_conditioned"] = t.ill_conditioned;
    con.point("P", centre);
    const char* names[] = {"V1", "V2", "V3"};
    const HomPoint* vs[] = {&v1, &v2, &v3};
    for (int i = 0; i < 3; ++i) con.point(names[i], euclidean(*vs[i]));
    con.segment("V1", "V2");
    con.segment("V2", "V3");
    con.segment("V3", "V1");
  } else if (method == "polar" || method == "conformal") {
    const Vec2 a = finite_point(field(field(ann, "points", "points"), "vp1", "points.vp1"),
                                "points.vp1");
    const Vec2 b = finite_point(field(ann.at("points"), "vp2", "points.vp2"),
                                "points.vp2");
    // The chosen method must succeed; the other one only adds intermediates.
    std::optional<ReflectedPolarFocal> rp;
    std::optional<ConformalFocal> cf;
    if (method == "polar") {
      rp = focal_reflected_polar_method(a, b, p);
      f = rp->focal;
      try {
        cf = focal_conformal_method(a, b, p);
      } catch (const Error&) {
      }
    } else {
      cf = focal_conformal_method(a, b, p);
      f = cf->focal;
      try {
        rp = focal_reflected_polar_method(a, b, p);
      } catch (const Error&) {
      }
    }
    if (rp) add_polar_construction(*rp, a, b, p, inter, con);
    if (cf) add_conformal_construction(*cf, a, b, p, inter, con);
    if (!horizon) horizon = orient_horizon_upright(line_through(a, b));
  } else if (method == "angle") {
    const json& ka = field(ann, "known_angles", "known_angles");
    if (!ka.is_array() || ka.empty()) {
      throw SchemaError("field 'known_angles' must be a non-empty array");
    }
    auto read = [&ann, &ka](std::size_t i) {
      const std::string path = "known_angles[" + std::to_string(i) + "]";
      const json& q = ka.at(i);
      const Vec2 a = euclidean(resolve_point(ann, field(q, "vp_a", path + ".vp_a"),
                                             path + ".vp_a"));
      const Vec2 b = euclidean(resolve_point(ann, field(q, "vp_b", path + ".vp_b"),
                                             path + ".vp_b"));
      const double theta =
          number(field(q, "theta_deg", path + ".theta_deg"), path + ".theta_deg") / kDeg;
      return std::tuple{a, b, theta};
    };
    const auto [a, b, theta] = read(0);
    const KnownAngleFocal kf = conformal_point_from_known_angle(a, b, p, theta);
    f = kf.candidates.front().focal;
    json cands = json::array();
    for (const auto& c : kf.candidates) {
      cands.push_back({{"focal", c.focal},
                       {"s", c.s},
                       {"conformal_point", to_json(c.conformal_point.position())}});
    }
    report["candidates"] = cands;
    inter["d"] = kf.d;
    inter["s"] = kf.candidates.front().s;
    con.point("P", p);
    con.point("A", a);
    con.point("B", b);
    con.point("O", kf.o);
    con.point("C", kf.candidates.front().conformal_point.position());
    con.segment("A", "B");
    con.segment("P", "O");
    con.segment("O", "C");
    if (ka.size() >= 2) {
      const auto [a2, b2, theta2] = read(1);
      const PrincipalLocus locus =
          principal_line_constraint(a, b, theta, a2, b2, theta2);
      report["principal_line"] = to_json(locus.line);
    }
    if (!horizon) horizon = orient_horizon_upright(line_through(a, b));
  } else {
    throw SchemaError("unknown method '" + method +
                      "' (expected three-vp, polar, conformal or angle)");
  }

  const CalibrationMatrix k = CalibrationMatrix::square(f, centre.x(), centre.y());
  report["focal"] = f;
  report["principal_point"] = to_json(centre);
  report["calibrating_conic"] = conic_json(calibrating_conic_from_k(k), f);
  report["intermediates"] = inter;
  if (!con.empty()) report["construction"] = con.to_json_value();
  if (horizon) {
    report["horizon"] = to_json(*horizon);
    report["conformal_point"] = conformal_json(conformal_point_from_k(*horizon, k));
  }
  return {report, k, horizon};
}

// ---------------------------------------------------------------------------
// Overlay

std::vector<std::pair<double, double>> sample_conic(const CalibrationMatrix& k,
                                                    int n = 256) {
  std::vector<std::pair<double, double>> pts;
  const Mat3 m = k.matrix();
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const Vec3 x = m * Vec3(std::cos(t), std::sin(t), 1.0);
    pts.emplace_back(x.x() / x.z(), x.y() / x.z());
  }
  return pts;
}

// Endpoints spanning the image along the line's dominant direction.
std::pair<Vec2, Vec2> line_span(const HomLine& l, double w, double h) {
  const Vec3 v = l.vec();
  if (std::abs(v.y()) >= std::abs(v.x())) {
    return {{0.0, -v.z() / v.y()}, {w, -(v.z() + v.x() * w) / v.y()}};
  }
  return {{-v.z() / v.x(), 0.0}, {-(v.z() + v.y() * h) / v.x(), h}};
}

void marker(svg::Document& doc, const std::string& id, const Vec2& p,
            const std::string& label, const std::string& colour) {
  doc.circle(id, p.x(), p.y(), 4.0, {colour, colour, 1.0, ""});
  doc.text(id + "-label", p.x() + 6.0, p.y() - 6.0, label);
}

// ---------------------------------------------------------------------------
// Odometry

MatchSet parse_pair(const json& pair, std::size_t index) {
  const std::string path = "pairs[" + std::to_string(index) + "]";
  MatchSet ms;
  ms.frame_i = field(pair, "i", path + ".i").get<int>();
  ms.frame_j = field(pair, "j", path + ".j").get<int>();
  const json& m = field(pair, "matches", path + ".matches");
  if (!m.is_array()) throw SchemaError("field '" + path + ".matches' must be an array");
  for (std::size_t q = 0; q < m.size(); ++q) {
    const json& row = m[q];
    const std::string rp = path + ".matches[" + std::to_string(q) + "]";
    if (!row.is_array() || row.size() != 4) {
      throw SchemaError("field '" + rp + "' must be [x, y, x2, y2]");
    }
    ms.matches.push_back({Vec2(number(row[0], rp), number(row[1], rp)),
                          Vec2(number(row[2], rp), number(row[3], rp))});
  }
  if (pair.contains("ground_plane")) {
    const json& g = pair.at("ground_plane");
    if (!g.is_array() || g.size() != m.size()) {
      throw SchemaError("field '" + path +
                        ".ground_plane' must have one flag per match");
    }
    for (const auto& b : g) ms.ground_plane.push_back(b.get<bool>());
  }
  return ms;
}

std::string heading_svg(const std::vector<FramePose>& poses, int frames) {
  const double w = 800.0;
  const double h = 400.0;
  const double left = 60.0;
  const double right = 20.0;
  const double top = 20.0;
  const double bottom = 40.0;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& p : poses) {
    lo = std::min(lo, p.theta * kDeg);
    hi = std::max(hi, p.theta * kDeg);
  }
  lo = std::floor(lo / 10.0) * 10.0 - 10.0;
  hi = std::ceil(hi / 10.0) * 10.0 + 10.0;
  const double span_x = std::max(frames - 1, 1);
  auto sx = [&](double f) { return left + (w - left - right) * f / span_x; };
  auto sy = [&](double d) { return top + (h - top - bottom) * (hi - d) / (hi - lo); };

  svg::Document doc(w, h);
  doc.begin_group("axes");
  doc.line("axis-x", left, sy(0.0), w - right, sy(0.0), {"gray", "none", 1.0, ""});
  doc.line("axis-y", left, top, left, h - bottom, {"gray", "none", 1.0, ""});
  for (double d = lo; d <= hi + 1e-9; d += 10.0) {
    const std::string id = "tick-y-" + std::to_string(static_cast<int>(d));
    doc.line(id, left - 4.0, sy(d), left, sy(d), {"gray", "none", 1.0, ""});
    doc.text(id + "-label", left - 8.0, sy(d) + 4.0,
             std::to_string(static_cast<int>(d)), 10.0, "end");
  }
  doc.text("label-x", w / 2.0, h - 8.0, "frame", 12.0, "middle");
  doc.text("label-y", 14.0, top + 10.0, "heading (deg)", 12.0, "start");
  doc.end_group();

  std::vector<std::pair<double, double>> pts;
  for (const auto& p : poses) pts.emplace_back(sx(p.frame), sy(p.theta * kDeg));
  doc.begin_group("heading");
  doc.path("heading-curve", pts, false, {"steelblue", "none", 1.5, ""});
  for (const auto& p : poses) {
    if (p.interpolated) {
      doc.circle("interpolated-" + std::to_string(p.frame), sx(p.frame),
                 sy(p.theta * kDeg), 3.0, {"orange", "orange", 1.0, ""});
    }
  }
  doc.end_group();
  return doc.str();
}

}  // namespace

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int exit_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::schema:
      case ErrorKind::precondition:
        return 2;
      case ErrorKind::degenerate:
        return 3;
      case ErrorKind::estimation:
        return 4;
    }
  }
  if (dynamic_cast<const json::exception*>(&e) != nullptr) return 2;
  return 1;
}

Output calibrate(const json& annotation, const std::string& method) {
  Calibration c = run_calibration(annotation, method);
  const std::string svg = overlay(c.report);
  return {std::move(c.report), svg};
}

Output measure(const json& ann, const std::optional<std::string>& method,
               const std::optional<std::string>& query) {
  const ImageSize img = image_size(ann);
  std::optional<CalibrationMatrix> k;
  std::optional<HomLine> horizon = annotated_horizon(ann);
  if (ann.contains("camera")) {
    k = camera_from_json(ann.at("camera"), "camera");
  } else if (method) {
    Calibration c = run_calibration(ann, *method);
    k = c.k;
    if (!horizon) horizon = c.horizon;
  } else {
    throw SchemaError("missing field 'camera' (or pass --method to calibrate first)");
  }

  json queries = json::array();
  if (ann.contains("queries")) {
    if (!ann.at("queries").is_array()) {
      throw SchemaError("field 'queries' must be an array");
    }
    queries = ann.at("queries");
  }
  if (query) {
    json kept = json::array();
    for (const auto& q : queries) {
      if (q.value("type", "") == *query) kept.push_back(q);
    }
    if (kept.empty()) {
      if (*query == "tilt" || *query == "fov") {
        kept.push_back({{"type", *query}});
      } else {
        throw SchemaError("no query of type '" + *query + "' in 'queries'");
      }
    }
    queries = kept;
  }
  if (queries.empty()) throw SchemaError("missing field 'queries'");

  auto need_horizon = [&horizon](const std::string& path) -> const HomLine& {
    if (!horizon) throw SchemaError("missing field 'lines.horizon' for " + path);
    return *horizon;
  };

  json results = json::array();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const json& q = queries[i];
    const std::string path = "queries[" + std::to_string(i) + "]";
    const std::string type = field(q, "type", path + ".type").get<std::string>();
    json r = {{"type", type}};
    if (q.contains("name")) r["name"] = q.at("name");
    if (type == "ray_angle") {
      const HomPoint a = resolve_point(ann, field(q, "a", path + ".a"), path + ".a");
      const HomPoint b = resolve_point(ann, field(q, "b", path + ".b"), path + ".b");
      const AngleMeasurement m = angle_cross_ratio(a, b, *k);
      r["degrees"] = round3(m.degrees());
      r["algebraic_degrees"] = round3(angle_algebraic(a, b, *k).degrees());
    } else if (type == "plane_angle") {
      const HomPoint a = resolve_point(ann, field(q, "a", path + ".a"), path + ".a");
      const HomPoint b = resolve_point(ann, field(q, "b", path + ".b"), path + ".b");
      const ConformalPoint cp = conformal_point_from_k(need_horizon(path), *k);
      r["degrees"] = round3(plane_angle({a, b}, cp).degrees());
      r["conformal_point"] = to_json(cp.position());
    } else if (type == "tilt") {
      r["degrees"] =
          round3(camera_tilt(need_horizon(path), calibrating_conic_from_k(*k)) * kDeg);
    } else if (type == "fov") {
      const FieldOfView fov =
          field_of_view(calibrating_conic_from_k(*k), img.width, img.height);
      r["horizontal_deg"] = round3(fov.horizontal * kDeg);
      r["vertical_deg"] = round3(fov.vertical * kDeg);
      r["diagonal_deg"] = round3(fov.diagonal * kDeg);
    } else {
      throw SchemaError("field '" + path + ".type' has unknown value '" + type + "'");
    }
    results.push_back(std::move(r));
  }

  json report = {{"camera", camera_json(*k)}, {"results", results}};
  if (horizon) report["horizon"] = to_json(*horizon);
  return {report, {}};
}

Output odometry(const json& doc, const OdometryOptions& opt) {
  const int frames = field(doc, "frames", "frames").get<int>();
  if (frames < 0) throw SchemaError("field 'frames' must be non-negative");
  const json& pairs_json = field(doc, "pairs", "pairs");
  if (!pairs_json.is_array()) throw SchemaError("field 'pairs' must be an array");
  const CalibrationMatrix k = camera_from_json(field(doc, "camera", "camera"), "camera");

  std::vector<MatchSet> pairs;
  for (std::size_t i = 0; i < pairs_json.size(); ++i) {
    pairs.push_back(parse_pair(pairs_json[i], i));
  }

  SequenceConfig cfg;
  if (opt.estimator == "ransac") {
    cfg.estimator = Estimator::ransac;
  } else if (opt.estimator == "median") {
    cfg.estimator = Estimator::median;
  } else {
    throw SchemaError("unknown estimator '" + opt.estimator + "'");
  }
  if (opt.on_failure == "interpolate") {
    cfg.on_failure = FailurePolicy::interpolate;
  } else if (opt.on_failure == "drop") {
    cfg.on_failure = FailurePolicy::drop;
  } else {
    throw SchemaError("unknown failure policy '" + opt.on_failure + "'");
  }
  cfg.ransac.tol = opt.tol_deg / kDeg;
  cfg.ransac.iterations = opt.iterations;
  cfg.ransac.seed = opt.seed;
  cfg.translation_gate = opt.gate;
  cfg.frames = frames;

  json report;
  report["frames"] = frames;
  report["camera"] = camera_json(k);
  report["estimator"] = opt.estimator;
  if (pairs.empty()) {
    report["trajectory"] = json::array();
    report["pairs"] = json::array();
    return {report, heading_svg({}, frames)};
  }

  HomLine horizon = doc.contains("horizon")
                        ? line_value(doc.at("horizon"), "horizon")
                        : estimate_sequence_horizon(pairs);
  std::vector<Vec2> seen;
  for (const auto& ms : pairs) {
    for (std::size_t q = 0; q < ms.size(); ++q) {
      if (ms.on_ground(q)) seen.push_back(ms.matches[q].first);
    }
  }
  horizon = orient_horizon_by_majority(horizon, seen);
  const ConformalPoint cp = conformal_point_from_k(horizon, k);
  report["horizon"] = to_json(horizon);
  report["conformal_point"] = conformal_json(cp);

  const SequenceResult res = run_sequence(pairs, k, horizon, cp, cfg);
  json traj = json::array();
  for (const auto& p : res.trajectory.poses) {
    traj.push_back({{"frame", p.frame},
                    {"theta_deg", p.theta * kDeg},
                    {"tx", p.tx},
                    {"ty", p.ty},
                    {"interpolated", p.interpolated}});
  }
  json diag = json::array();
  for (const auto& d : res.pairs) {
    json e = {{"i", d.i},
              {"j", d.j},
              {"ok", d.ok},
              {"theta_deg", d.theta * kDeg},
              {"support", d.support},
              {"matches", d.matches},
              {"inlier_ratio", d.inlier_ratio}};
    if (!d.message.empty()) e["message"] = d.message;
    diag.push_back(std::move(e));
  }
  report["trajectory"] = traj;
  report["pairs"] = diag;
  return {report, heading_svg(res.trajectory.poses, frames)};
}

std::string overlay(const json& doc) {
  const ImageSize img = image_size(doc);
  svg::Document out(img.width, img.height);
  bool drawn = false;

  std::optional<CalibrationMatrix> k;
  if (doc.contains("calibrating_conic")) {
    const json& cc = doc.at("calibrating_conic");
    const json& co = field(cc, "coefficients", "calibrating_conic.coefficients");
    if (!co.is_array() || co.size() != 6) {
      throw SchemaError("field 'calibrating_conic.coefficients' must have 6 entries");
    }
    const Conic c(co[0].get<double>(), co[1].get<double>(), co[2].get<double>(),
                  co[3].get<double>(), co[4].get<double>(), co[5].get<double>());
    k = k_from_calibrating_conic(c);
  } else if (doc.contains("camera")) {
    k = camera_from_json(doc.at("camera"), "camera");
  }
  if (k) {
    out.begin_group("conic");
    out.path("calibrating-conic", sample_conic(*k), true, {"crimson", "none", 1.5, ""});
    marker(out, "principal-point", k->principal_point(), "P", "crimson");
    out.end_group();
    drawn = true;
  }

  std::optional<HomLine> horizon;
  if (doc.contains("horizon")) {
    horizon = line_value(doc.at("horizon"), "horizon");
  } else if (doc.contains("lines") && doc.at("lines").contains("horizon")) {
    horizon = line_value(doc.at("lines").at("horizon"), "lines.horizon");
  }
  if (horizon && !is_line_at_infinity(*horizon)) {
    const auto [a, b] = line_span(*horizon, img.width, img.height);
    out.begin_group("horizon-layer");
    out.line("horizon", a.x(), a.y(), b.x(), b.y(), {"seagreen", "none", 1.5, "6,4"});
    out.end_group();
    drawn = true;
  }

  if (doc.contains("conformal_point")) {
    const Vec2 c = finite_point(field(doc.at("conformal_point"), "position",
                                      "conformal_point.position"),
                                "conformal_point.position");
    out.begin_group("conformal");
    marker(out, "conformal-point", c, "C", "darkorange");
    out.end_group();
    drawn = true;
  }

  if (doc.contains("construction")) {
    const json& con = doc.at("construction");
    const json& pts = field(con, "points", "construction.points");
    out.begin_group("construction");
    if (con.contains("segments")) {
      for (const auto& s : con.at("segments")) {
        const std::string a = s.at(0).get<std::string>();
        const std::string b = s.at(1).get<std::string>();
        const Vec2 pa = finite_point(field(pts, a, "construction.points." + a),
                                     "construction.points." + a);
        const Vec2 pb = finite_point(field(pts, b, "construction.points." + b),
                                     "construction.points." + b);
        const std::string id = "segment-" + a + b;
        out.line(id, pa.x(), pa.y(), pb.x(), pb.y(), {"navy", "none", 1.0, ""});
        const Vec2 mid = 0.5 * (pa + pb);
        out.text(id + "-label", mid.x() + 4.0, mid.y() - 4.0, a + b, 11.0);
      }
    }
    for (const auto& [name, value] : pts.items()) {
      marker(out, "point-" + name, finite_point(value, "construction.points." + name),
             name, "navy");
    }
    out.end_group();
    drawn = true;
  } else if (doc.contains("points") && doc.at("points").is_object()) {
    out.begin_group("points");
    for (const auto& [name, value] : doc.at("points").items()) {
      const HomPoint p = point_value(value, "points." + name);
      if (!is_finite(p)) continue;
      marker(out, "point-" + name, euclidean(p), name, "navy");
      drawn = true;
    }
    out.end_group();
  }

  if (!drawn) throw PreconditionError("overlay: nothing drawable in input");
  return out.str();
}

SynthOutput synth(const SynthOptions& opt) {
  if (opt.frames < 1) throw PreconditionError("synth: need at least one frame");
  const CalibrationMatrix k =
      CalibrationMatrix::square(opt.focal, 0.5 * opt.width, 0.5 * opt.height);
  synth::PlanarMotionSpec spec{k,
                               opt.camera_height,
                               opt.pitch_deg / kDeg,
                               opt.width,
                               opt.height,
                               synth::sinusoidal_motion(
                                   static_cast<std::size_t>(opt.frames),
                                   opt.amplitude_deg / kDeg, opt.period, opt.step)};
  synth::GenerationOptions g;
  g.noise_sigma = opt.noise;
  g.outlier_fraction = opt.outliers;
  g.seed = opt.seed;
  g.pair_offsets = opt.offsets;
  g.points_per_pair = static_cast<std::size_t>(std::max(opt.points, 0));
  const synth::GeneratedSequence seq = synth::generate_sequence(spec, g);

  json pairs = json::array();
  for (const auto& ms : seq.pairs) {
    json m = json::array();
    json gp = json::array();
    for (std::size_t q = 0; q < ms.size(); ++q) {
      const auto& pm = ms.matches[q];
      m.push_back({pm.first.x(), pm.first.y(), pm.second.x(), pm.second.y()});
      gp.push_back(ms.on_ground(q));
    }
    pairs.push_back({{"i", ms.frame_i}, {"j", ms.frame_j}, {"matches", m},
                     {"ground_plane", gp}});
  }
  json matches = {{"frames", opt.frames},
                  {"camera", {{"focal", opt.focal},
                              {"principal_point", to_json(k.principal_point())}}},
                  {"horizon", to_json(seq.horizon)},
                  {"pairs", pairs}};

  // Ground truth relative to frame 0, lengths in camera heights.
  const synth::Pose2& p0 = spec.poses.front();
  const double c0 = std::cos(p0.heading);
  const double s0 = std::sin(p0.heading);
  json poses = json::array();
  for (std::size_t f = 0; f < spec.poses.size(); ++f) {
    const auto& p = spec.poses[f];
    const double dx = (p.x - p0.x) / opt.camera_height;
    const double dy = (p.y - p0.y) / opt.camera_height;
    poses.push_back({{"frame", f},
                     {"theta_deg", wrap_angle(p.heading - p0.heading) * kDeg},
                     {"x", c0 * dx + s0 * dy},
                     {"y", -s0 * dx + c0 * dy}});
  }
  json truth_pairs = json::array();
  for (const auto& t : seq.truth) {
    const auto outliers = std::count(t.outlier.begin(), t.outlier.end(), true);
    truth_pairs.push_back({{"i", t.i},
                           {"j", t.j},
                           {"theta_deg", t.theta * kDeg},
                           {"tx", t.t.x()},
                           {"ty", t.t.y()},
                           {"outliers", outliers}});
  }
  json truth = {{"units", "camera_height"},
                {"camera_height", opt.camera_height},
                {"pitch_deg", opt.pitch_deg},
                {"poses", poses},
                {"pairs", truth_pairs}};
  return {matches, truth};
}

}  // namespace conicam::cli
