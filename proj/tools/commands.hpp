#ifndef CONICAM_TOOLS_COMMANDS_HPP
#define CONICAM_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace conicam::cli {

using nlohmann::json;

struct Output {
  json report;
  std::string svg;
};

/// --method three-vp | polar | conformal | angle
Output calibrate(const json& annotation, const std::string& method);

/// Evaluates the annotation's queries (optionally only those of type
/// `query`). The camera comes from the annotation, or from `method`.
Output measure(const json& annotation, const std::optional<std::string>& method,
               const std::optional<std::string>& query);

struct OdometryOptions {
  std::string estimator = "ransac";
  double tol_deg = 0.5;
  int iterations = 200;
  std::uint64_t seed = 0;
  std::string on_failure = "interpolate";
  double gate = 0.1;
};

Output odometry(const json& matches, const OdometryOptions& opt);

/// SVG of a calibration report or an annotation file.
std::string overlay(const json& doc);

struct SynthOptions {
  int frames = 150;
  double focal = 800.0;
  double width = 640.0;
  double height = 480.0;
  double camera_height = 1.5;
  double pitch_deg = 20.0;
  double amplitude_deg = 30.0;
  double period = 75.0;
  double step = 0.3;
  double noise = 0.0;
  double outliers = 0.0;
  std::uint64_t seed = 0;
  int points = 100;
  std::vector<int> offsets{1};
};

struct SynthOutput {
  json matches;
  json truth;
};

SynthOutput synth(const SynthOptions& opt);

/// 2 schema or invalid input, 3 degenerate geometry, 4 estimation failure,
/// 1 anything else.
int exit_code(const std::exception& e);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const json& j);

}  // namespace conicam::cli

#endif  // CONICAM_TOOLS_COMMANDS_HPP
