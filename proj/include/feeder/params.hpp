#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace feeder {

// Thrown for inputs that break an operation's preconditions.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Scalar model inputs. Times are in hours, lengths in km, money in $.
// Defaults reproduce the reference parameter set (3 x 2 km quarter region,
// high-wage city).
struct ModelParams {
  double region_length = 3.0;             // L, along x (nonstop direction)
  double region_width = 2.0;              // W, along y (stopping direction)
  double value_of_time = 20.0;            // theta, $/h
  double stop_cost = 0.0;                 // pi_s, $/stop/h
  double dwell_per_stop = 12.0 / 3600.0;  // tau_0, h/stop
  double alight_time = 2.0 / 3600.0;      // tau_a, h/patron
  double board_time = 4.0 / 3600.0;       // tau_b, h/patron
  double walk_speed = 2.0;                // v_W, km/h
  double bus_speed = 25.0;                // v_I, km/h
  double transfer_to_trunk = 3.0 / 60.0;  // t_{f-t}, h/patron
  double transfer_to_feeder = 3.0 / 60.0; // t_{t-f}, h/patron
  double min_headway = 3.0 / 60.0;        // H_min, h
  double max_headway = 30.0 / 60.0;       // H_max, h
  double trunk_headway = 5.0 / 60.0;      // H_t, h
  double tolerance = 1e-4;                // epsilon
  double walk_radius = 0.3;               // Manhattan walking zone around the terminal, km
  int min_capacity = 4;                   // vehicle-size search range, patrons
  int max_capacity = 80;
  int nx = 20;                            // lattice columns along x ("n")
  int ny = 30;                            // lattice rows along y ("m")

  // Lower bound on the distribution-direction headway.
  double min_distribution_headway() const {
    return min_headway > trunk_headway ? min_headway : trunk_headway;
  }
};

struct Violation {
  std::string field;
  std::string rule;
};

// Checks every invariant and reports all violations.
inline std::vector<Violation> validate(const ModelParams& p) {
  std::vector<Violation> out;
  auto need = [&](bool ok, const char* field, const char* rule) {
    if (!ok) out.push_back({field, rule});
  };
  need(p.region_length > 0, "region_length", "L > 0");
  need(p.region_width > 0, "region_width", "W > 0");
  need(p.value_of_time > 0, "value_of_time", "theta > 0");
  need(p.stop_cost >= 0, "stop_cost", "pi_s >= 0");
  need(p.dwell_per_stop >= 0, "dwell_per_stop", "tau_0 >= 0");
  need(p.alight_time >= 0, "alight_time", "tau_a >= 0");
  need(p.board_time >= 0, "board_time", "tau_b >= 0");
  need(p.walk_speed > 0, "walk_speed", "v_W > 0");
  need(p.bus_speed > 0, "bus_speed", "v_I > 0");
  need(p.transfer_to_trunk >= 0, "transfer_to_trunk", "t_ft >= 0");
  need(p.transfer_to_feeder >= 0, "transfer_to_feeder", "t_tf >= 0");
  need(p.min_headway > 0, "min_headway", "H_min > 0");
  need(p.min_headway <= p.max_headway, "max_headway", "H_min <= H_max");
  need(p.trunk_headway > 0, "trunk_headway", "H_t > 0");
  need(p.trunk_headway <= p.max_headway, "trunk_headway", "H_t <= H_max");
  need(p.tolerance > 0, "tolerance", "epsilon > 0");
  need(p.walk_radius >= 0, "walk_radius", "walk_radius >= 0");
  need(p.min_capacity >= 1, "min_capacity", "K_min >= 1");
  need(p.min_capacity <= p.max_capacity, "max_capacity", "K_min <= K_max");
  need(p.nx >= 1, "nx", "n >= 1");
  need(p.ny >= 1, "ny", "m >= 1");
  return out;
}

inline void require_valid(const ModelParams& p) {
  auto v = validate(p);
  if (v.empty()) return;
  std::string msg = "invalid parameters:";
  for (const auto& e : v) msg += " [" + e.field + ": " + e.rule + "]";
  throw InvalidParameter(msg);
}

// Agency unit costs as affine functions of vehicle capacity K and value of
// time theta, calibrated on a full-size bus and a minibus.
struct AgencyRates {
  static constexpr double a_v = 0.0314;
  static constexpr double b_v = 0.0039;
  static constexpr double a_m = 2.068;
  static constexpr double b_m = 0.108;
  static constexpr double c_m = 2.0;

  double per_vehicle_km = 0;    // pi_v, $/veh-km
  double per_vehicle_hour = 0;  // pi_m, $/veh-h
};

inline AgencyRates agency_rates(int capacity, double value_of_time) {
  if (capacity < 1) throw InvalidParameter("agency_rates: capacity must be >= 1");
  if (!(value_of_time > 0)) throw InvalidParameter("agency_rates: value of time must be > 0");
  AgencyRates r;
  r.per_vehicle_km = AgencyRates::a_v + AgencyRates::b_v * capacity;
  r.per_vehicle_hour = AgencyRates::a_m + AgencyRates::b_m * capacity + AgencyRates::c_m * value_of_time;
  return r;
}

}  // namespace feeder
