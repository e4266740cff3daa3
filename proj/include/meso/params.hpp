#pragma once

#include <cmath>
#include <string>

#include "meso/errors.hpp"
#include "meso/keyvalue.hpp"
#include "meso/units.hpp"

namespace meso {

enum class Boundary {
  FreeDownstream,  // vehicles exit past cell L; arrivals enter at cell 1
  Periodic,        // ring road, positions wrap modulo L
};

inline std::string to_string(Boundary b) {
  return b == Boundary::FreeDownstream ? "free" : "periodic";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "free" || s == "free_downstream") return Boundary::FreeDownstream;
  if (s == "periodic" || s == "ring") return Boundary::Periodic;
  throw ConfigError("boundary must be 'free' or 'periodic', got '" + s + "'");
}

// Model parameters in physical units. They are converted to lattice units at
// evaluation time (see LatticeParams) so one parameter file can serve
// lattices with different cell sizes and step durations.
struct ModelParams {
  double theta0 = 110.0;  // energy scale [m^2/s^2]
  double theta1 = 7.5;    // minimum spacing [m]
  double theta2 = 1.1;    // time-gap slope [s]
  double beta = 1.0;      // dynamical-potential precision [1/cells^2]; +inf = deterministic update
  double p1 = 0.0;        // arrival probability per step
  double p2 = 0.0;        // slow-down probability per step
  Boundary boundary = Boundary::FreeDownstream;

  void validate() const {
    if (!(theta0 > 0.0)) throw ConfigError("ModelParams: theta0 must be > 0");
    if (!(theta1 >= 0.0)) throw ConfigError("ModelParams: theta1 must be >= 0");
    if (!(theta2 > 0.0)) throw ConfigError("ModelParams: theta2 must be > 0");
    if (!(beta > 0.0)) throw ConfigError("ModelParams: beta must be > 0");
    if (p1 < 0.0 || p1 > 1.0) throw ConfigError("ModelParams: p1 must be in [0,1]");
    if (p2 < 0.0 || p2 > 1.0) throw ConfigError("ModelParams: p2 must be in [0,1]");
  }
};

// The same parameters expressed in lattice units (cells, steps). All
// potential evaluations run in this system so that speeds compare in
// cells/step throughout.
struct LatticeParams {
  double theta0 = 1.0;  // [(cells/step)^2]
  double theta1 = 1.0;  // [cells]
  double theta2 = 1.0;  // [steps]
  double beta = 1.0;    // [1/cells^2], already lattice units
  int v_max = 1;
  Boundary boundary = Boundary::FreeDownstream;

  LatticeParams() = default;
  LatticeParams(const ModelParams& p, const LatticeConfig& cfg) {
    const double cell_speed = cfg.delta_l / cfg.delta_t;  // m/s per cell/step
    theta0 = p.theta0 / (cell_speed * cell_speed);
    theta1 = p.theta1 / cfg.delta_l;
    theta2 = p.theta2 / cfg.delta_t;
    beta = p.beta;
    v_max = cfg.v_max;
    boundary = p.boundary;
  }

  bool deterministic_update() const { return std::isinf(beta); }
};

// Parameter file keys: theta0, theta1, theta2, beta, p1, p2, v_max, L,
// delta_l, delta_t, boundary.
inline LatticeConfig lattice_config_from(const KeyValues& kv) {
  LatticeConfig cfg;
  cfg.L = static_cast<int>(kv.get_int("L"));
  cfg.delta_l = kv.get_double("delta_l");
  cfg.delta_t = kv.get_double("delta_t");
  cfg.v_max = static_cast<int>(kv.get_int("v_max"));
  cfg.validate();
  return cfg;
}

inline ModelParams model_params_from(const KeyValues& kv) {
  ModelParams p;
  p.theta0 = kv.get_double("theta0");
  p.theta1 = kv.get_double("theta1");
  p.theta2 = kv.get_double("theta2");
  p.beta = kv.get_double_or("beta", 1.0);
  p.p1 = kv.get_double_or("p1", 0.0);
  p.p2 = kv.get_double_or("p2", 0.0);
  p.boundary = boundary_from_string(kv.get_or("boundary", "free"));
  p.validate();
  return p;
}

}  // namespace meso
