// Run configuration: plain-text key = value files with [domain], [time],
// [init], [output] sections, validation with line-numbered diagnostics,
// and the initial-velocity presets.
#pragma once

#include <string>

#include "spectral.h"

namespace df {

inline constexpr const char* kVersion = "0.1.0";

struct SimConfig {
  // [domain]
  double kappa = 400.0;
  int K = 31;
  int N_r = 32;
  double sobolev_s = 4.0;
  double delta0 = 0.05;
  // [time]
  double dt = 0.0;  // <= 0 means "auto": substeps stiff quarter-periods, capped
  double t_end = 0.25;
  int substeps = 4;
  double picard_tol = 1e-10;
  int picard_max = 12;
  // [init]
  std::string preset = "rest";  // rest | rotation | stream | gradient-pulse
  double amplitude = 1.0;       // strength of the divergence-free tangent part
  double pulse = 1.0;           // gradient-pulse: coefficient a of (a/sqrt(kappa)) grad g0
  // [output]
  std::string output_dir;  // empty: no files written
  int stride = 1;
};

// Parses and validates; throws SimError{validation} listing every violation
// with its line number.  Unknown keys and type mismatches are errors.
SimConfig parse_config(const std::string& text);
SimConfig parse_config_file(const std::string& path);

// Canonical rendering of every field in config-file syntax (round-trips
// through parse_config); embedded in manifests.
std::string config_echo(const SimConfig& c);

// The collocation grid the config describes.
GridPtr grid_for(const SimConfig& c);

// Initial velocity of the preset on the grid:
//   rest           0
//   rotation       amplitude * (-y, x)
//   stream         perp-gradient of a stream function vanishing on the circle
//                  (tangent, divergence-free, angularly non-symmetric)
//   gradient-pulse amplitude * (-y, x) + (pulse/sqrt(kappa)) * grad g0,
//                  g0 a fixed degree-3 harmonic polynomial, so the gradient
//                  part of u0 has norm proportional to 1/sqrt(kappa)
InteriorVector initial_velocity(const SimConfig& c, GridPtr g);

// The divergence-free tangent part of the preset alone (the kappa-free
// limit field the fixed-boundary reference runs with).
InteriorVector initial_velocity_tangent(const SimConfig& c, GridPtr g);

}  // namespace df
