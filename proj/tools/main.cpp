#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "conicam/errors.hpp"

namespace {

using conicam::cli::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw conicam::SchemaError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw conicam::SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera calibration and planar odometry with the calibrating conic"};
  app.require_subcommand(1);

  std::string input;
  std::string out;
  std::string svg_out;
  std::string method;
  std::string query;

  auto* cal = app.add_subcommand("calibrate", "calibrate from an annotation file");
  cal->add_option("annotation", input, "annotation JSON")->required();
  cal->add_option("--method", method, "three-vp | polar | conformal | angle")
      ->required()
      ->check(CLI::IsMember({"three-vp", "polar", "conformal", "angle"}));
  cal->add_option("--out", out, "report JSON (default stdout)");
  cal->add_option("--svg", svg_out, "overlay SVG");

  auto* mea = app.add_subcommand("measure", "evaluate angle queries");
  mea->add_option("annotation", input, "annotation JSON")->required();
  mea->add_option("--method", method, "calibrate first with this method")
      ->check(CLI::IsMember({"three-vp", "polar", "conformal", "angle"}));
  mea->add_option("--query", query, "ray_angle | plane_angle | tilt | fov");
  mea->add_option("--out", out, "result JSON (default stdout)");

  conicam::cli::OdometryOptions odo_opt;
  auto* odo = app.add_subcommand("odometry", "planar odometry from a match file");
  odo->add_option("matches", input, "match JSON")->required();
  odo->add_option("--estimator", odo_opt.estimator, "ransac | median")
      ->check(CLI::IsMember({"ransac", "median"}));
  odo->add_option("--tol-deg", odo_opt.tol_deg, "RANSAC support tolerance (degrees)");
  odo->add_option("--iterations", odo_opt.iterations, "RANSAC iterations");
  odo->add_option("--seed", odo_opt.seed, "random seed");
  odo->add_option("--on-failure", odo_opt.on_failure, "interpolate | drop")
      ->check(CLI::IsMember({"interpolate", "drop"}));
  odo->add_option("--gate", odo_opt.gate, "translation gate (camera heights)");
  odo->add_option("--out", out, "trajectory JSON (default stdout)");
  odo->add_option("--svg", svg_out, "heading curve SVG");

  auto* ovl = app.add_subcommand("overlay", "render a report or annotation as SVG");
  ovl->add_option("input", input, "report or annotation JSON")->required();
  ovl->add_option("--out", out, "SVG (default stdout)");

  conicam::cli::SynthOptions syn_opt;
  std::string truth_out;
  auto* syn = app.add_subcommand("synth", "generate a synthetic planar-motion match file");
  syn->add_option("--frames", syn_opt.frames, "number of frames");
  syn->add_option("--focal", syn_opt.focal, "focal length (pixels)");
  syn->add_option("--width", syn_opt.width, "image width");
  syn->add_option("--height", syn_opt.height, "image height");
  syn->add_option("--camera-height", syn_opt.camera_height, "camera height above the plane");
  syn->add_option("--pitch-deg", syn_opt.pitch_deg, "downward pitch");
  syn->add_option("--amplitude-deg", syn_opt.amplitude_deg, "heading amplitude");
  syn->add_option("--period", syn_opt.period, "heading period (frames)");
  syn->add_option("--step", syn_opt.step, "distance per frame");
  syn->add_option("--noise", syn_opt.noise, "pixel noise sigma");
  syn->add_option("--outliers", syn_opt.outliers, "outlier fraction");
  syn->add_option("--seed", syn_opt.seed, "random seed");
  syn->add_option("--points", syn_opt.points, "ground points per pair");
  syn->add_option("--offsets", syn_opt.offsets, "pair frame offsets");
  syn->add_option("--out", out, "match JSON (default stdout)");
  syn->add_option("--truth", truth_out, "ground-truth sidecar JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    namespace c = conicam::cli;
    if (*cal) {
      const c::Output o = c::calibrate(read_json(input), method);
      write(out, c::dump(o.report));
      if (!svg_out.empty()) write(svg_out, o.svg);
    } else if (*mea) {
      const c::Output o =
          c::measure(read_json(input),
                     method.empty() ? std::nullopt : std::optional<std::string>(method),
                     query.empty() ? std::nullopt : std::optional<std::string>(query));
      write(out, c::dump(o.report));
    } else if (*odo) {
      const c::Output o = c::odometry(read_json(input), odo_opt);
      write(out, c::dump(o.report));
      if (!svg_out.empty()) write(svg_out, o.svg);
    } else if (*ovl) {
      write(out, c::overlay(read_json(input)));
    } else if (*syn) {
      const c::SynthOutput o = c::synth(syn_opt);
      write(out, c::dump(o.matches));
      if (!truth_out.empty()) write(truth_out, c::dump(o.truth));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return conicam::cli::exit_code(e);
  }
  return 0;
}
