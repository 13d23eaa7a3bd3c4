#include <gtest/gtest.h>

#include <algorithm>

#include "feeder/params.hpp"

using namespace feeder;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

}  // namespace

TEST(AgencyRates, VehicleOfTenHighWage) {
  const auto r = agency_rates(10, 20);
  EXPECT_NEAR(r.per_vehicle_km, 0.0704, 1e-12);
  EXPECT_NEAR(r.per_vehicle_hour, 43.148, 1e-12);
}

TEST(AgencyRates, LargestVehicle) {
  const auto r = agency_rates(80, 20);
  EXPECT_NEAR(r.per_vehicle_km, 0.3434, 1e-12);
  EXPECT_NEAR(r.per_vehicle_hour, 50.708, 1e-12);
}

TEST(AgencyRates, RejectsNonPositiveInputs) {
  EXPECT_THROW(agency_rates(1, 0), InvalidParameter);
  EXPECT_THROW(agency_rates(0, 20), InvalidParameter);
  EXPECT_THROW(agency_rates(-3, 20), InvalidParameter);
  EXPECT_THROW(agency_rates(10, -1), InvalidParameter);
}

TEST(AgencyRates, AffineInCapacity) {
  for (int K = 1; K <= 80; ++K) {
    const double at_zero = AgencyRates::a_v;  // pi_v extrapolated to K = 0
    EXPECT_NEAR(agency_rates(K, 20).per_vehicle_km - at_zero, AgencyRates::b_v * K, 1e-12);
  }
}

TEST(AgencyRates, HourlyRateIncreasesWithCapacityAndWage) {
  for (int K = 1; K < 80; ++K) EXPECT_LT(agency_rates(K, 20).per_vehicle_hour, agency_rates(K + 1, 20).per_vehicle_hour);
  for (double th = 1; th < 40; th += 1) EXPECT_LT(agency_rates(10, th).per_vehicle_hour, agency_rates(10, th + 0.5).per_vehicle_hour);
}

TEST(ModelParams, DefaultsAreTheReferenceSet) {
  const ModelParams p;
  EXPECT_EQ(p.region_length, 3.0);
  EXPECT_EQ(p.region_width, 2.0);
  EXPECT_EQ(p.value_of_time, 20.0);
  EXPECT_EQ(p.stop_cost, 0.0);
  EXPECT_EQ(p.dwell_per_stop, 12.0 / 3600);
  EXPECT_EQ(p.alight_time, 2.0 / 3600);
  EXPECT_EQ(p.board_time, 4.0 / 3600);
  EXPECT_EQ(p.walk_speed, 2.0);
  EXPECT_EQ(p.bus_speed, 25.0);
  EXPECT_EQ(p.transfer_to_trunk, 3.0 / 60);
  EXPECT_EQ(p.transfer_to_feeder, 3.0 / 60);
  EXPECT_EQ(p.min_headway, 3.0 / 60);
  EXPECT_EQ(p.max_headway, 30.0 / 60);
  EXPECT_EQ(p.trunk_headway, 5.0 / 60);
  EXPECT_EQ(p.tolerance, 1e-4);
  EXPECT_EQ(p.walk_radius, 0.3);
  EXPECT_EQ(p.min_capacity, 4);
  EXPECT_EQ(p.max_capacity, 80);
  EXPECT_EQ(p.nx, 20);
  EXPECT_EQ(p.ny, 30);
}

TEST(ModelParams, DefaultsValidate) {
  EXPECT_TRUE(validate(ModelParams{}).empty());
  EXPECT_NO_THROW(require_valid(ModelParams{}));
}

TEST(ModelParams, HeadwayBoundsOutOfOrder) {
  ModelParams p;
  p.min_headway = 0.6;
  p.max_headway = 0.5;
  const auto v = validate(p);
  EXPECT_TRUE(has_rule(v, "H_min <= H_max"));
}

TEST(ModelParams, NegativeWidth) {
  ModelParams p;
  p.region_width = -1;
  EXPECT_TRUE(has_rule(validate(p), "W > 0"));
  EXPECT_THROW(require_valid(p), InvalidParameter);
}

TEST(ModelParams, ReportsEveryViolation) {
  ModelParams p;
  p.region_length = 0;
  p.walk_speed = -2;
  p.tolerance = 0;
  p.dwell_per_stop = -1;
  const auto v = validate(p);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_TRUE(has_rule(v, "L > 0"));
  EXPECT_TRUE(has_rule(v, "v_W > 0"));
  EXPECT_TRUE(has_rule(v, "epsilon > 0"));
  EXPECT_TRUE(has_rule(v, "tau_0 >= 0"));
}

TEST(ModelParams, DistributionHeadwayFloor) {
  ModelParams p;
  EXPECT_EQ(p.min_distribution_headway(), p.trunk_headway);
  p.trunk_headway = 0.02;
  EXPECT_EQ(p.min_distribution_headway(), p.min_headway);
}
