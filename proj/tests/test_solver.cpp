#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "feeder/solver.hpp"
#include "oracles.hpp"

using namespace feeder;

namespace {

DemandField uniform_field(const ModelParams& p, double c_p, double c_d, double walk_radius) {
  const double area = p.region_length * p.region_width;
  return {p.region_length, p.region_width, walk_radius,
          TruncNormalDensity{c_p * area, AxisProfile::uniform(), AxisProfile::uniform()},
          TruncNormalDensity{c_d * area, AxisProfile::uniform(), AxisProfile::uniform()}};
}

DemandField standard_field(const ModelParams& p, double scale = 1.0, double sigma_fraction = 0.25) {
  TruncNormalDensity c{1200 * scale, AxisProfile::normal(0, sigma_fraction * p.region_length),
                       AxisProfile::normal(0, sigma_fraction * p.region_width)};
  return DemandField::trunc_normal(p, c, c);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST(LocalRates, NoStopCostMeansNoStopRate) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  for (int i = 0; i < p.nx; ++i) {
    EXPECT_EQ(r.gamma[i], 0.0);
    EXPECT_GT(r.alpha[i], 0.0);
  }
}

TEST(LocalRates, NoBoardingTimesMeansNoBetas) {
  ModelParams p;
  p.alight_time = 0;
  p.board_time = 0;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  for (int i = 0; i < p.nx; ++i) {
    EXPECT_EQ(r.beta_p[i], 0.0);
    EXPECT_EQ(r.beta_d[i], 0.0);
  }
}

TEST(LocalRates, UniformCollectionDemandBeta) {
  const ModelParams p;
  const double c = 70, W = p.region_width;
  const auto a = aggregates(uniform_field(p, c, 0, 0.0), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  const double expect = p.alight_time * c * c * W * W + p.board_time * c * c * W * W;
  for (int i = 0; i < p.nx; ++i) EXPECT_NEAR(r.beta_p[i], expect, 1e-9 * expect);
}

TEST(LocalRates, RejectsNonPositiveStopSpacing) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  Grid2 b(p.nx, p.ny, 0.3);
  b(2, 2) = 0;
  EXPECT_THROW(local_rates(b, a, p, agency_rates(10, 20)), InvalidParameter);
}

TEST(UpdateHeadways, HeavyDemandClampsToMinimum) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 1e7, 1e7, 0.0), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  const auto u = update_headways(3, 0.5, r, a, p, 1000000000, Coordination::none);
  EXPECT_EQ(u.hp, p.min_headway);
  EXPECT_EQ(u.hd, p.min_distribution_headway());
}

TEST(UpdateHeadways, NoDistributionDemandGivesMaximum) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 100, 0, 0.0), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  EXPECT_EQ(update_headways(3, 0.5, r, a, p, 80, Coordination::none).hd, p.max_headway);
}

TEST(UpdateHeadways, MatchesOneDimensionalMinimizer) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const auto& p = inst.params;
    const auto d = oracle::random_feasible_design(inst.tables, p, inst.capacity, Coordination::none, rng);
    const auto rates = local_rates(d.b, inst.tables, p, inst.rates);
    const int i = std::uniform_int_distribution<int>(0, p.nx - 1)(rng);
    const auto u = update_headways(i, d.s[i], rates, inst.tables, p, inst.capacity, Coordination::none);
    const double s = d.s[i];
    auto upper = [&](double lo, double column) {
      const double cap = column > 0 ? inst.capacity / (column * s) : 1e300;
      return std::max(lo, std::min(cap, p.max_headway));
    };
    const double lo_p = p.min_headway, lo_d = p.min_distribution_headway();
    const double hp = oracle::argmin([&](double h) { return oracle::slice_hp(d, inst.tables, p, inst.rates, i, h); },
                                     lo_p, upper(lo_p, inst.tables.column_p[i]));
    const double hd = oracle::argmin([&](double h) { return oracle::slice_hd(d, inst.tables, p, inst.rates, i, h); },
                                     lo_d, upper(lo_d, inst.tables.column_d[i]));
    EXPECT_LE(rel(u.hp, hp), 1e-6) << "trial " << trial;
    EXPECT_LE(rel(u.hd, hd), 1e-6) << "trial " << trial;
  }
}

TEST(UpdateHeadways, CollectionCoordinationPicksBetterMultiple) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const auto& p = inst.params;
    const auto d = oracle::random_feasible_design(inst.tables, p, inst.capacity, Coordination::collect, rng);
    const auto rates = local_rates(d.b, inst.tables, p, inst.rates, Coordination::collect);
    const int i = std::uniform_int_distribution<int>(0, p.nx - 1)(rng);
    const auto u = update_headways(i, d.s[i], rates, inst.tables, p, inst.capacity, Coordination::collect);
    const double ht = p.trunk_headway;
    const double k = std::round(u.hp / ht);
    EXPECT_GE(k, 1);
    EXPECT_NEAR(u.hp, k * ht, 1e-12);
    // No admissible multiple does better on the slice.
    const auto slice = collection_slice(i, d.s[i], rates, inst.tables);
    const double cap = inst.tables.column_p[i] > 0 ? inst.capacity / (inst.tables.column_p[i] * d.s[i]) : 1e300;
    const int k_lo = std::max(1, static_cast<int>(std::ceil(p.min_headway / ht - 1e-9)));
    const int k_hi = std::max(k_lo, static_cast<int>(std::floor(std::min(cap, p.max_headway) / ht + 1e-9)));
    for (int m = k_lo; m <= k_hi; ++m) EXPECT_LE(slice(u.hp), slice(m * ht) * (1 + 1e-12));
  }
}

TEST(UpdateHeadways, DistributionCoordinationFixesTrunkHeadway) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20), Coordination::distribute);
  const auto ok = update_headways(10, 0.1, r, a, p, 80, Coordination::distribute);
  EXPECT_EQ(ok.hd, p.trunk_headway);
  EXPECT_TRUE(ok.distribution_feasible);
  const auto bad = update_headways(0, 3.0, r, a, p, 1, Coordination::distribute);
  EXPECT_FALSE(bad.distribution_feasible);
}

TEST(UpdateLineSpacing, NoDemandGivesRegionLength) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 0, 0, 0.3), Lattice::of(p));
  const auto r = local_rates(Grid2(p.nx, p.ny, 0.3), a, p, agency_rates(10, 20));
  EXPECT_EQ(update_line_spacing(4, 0.2, 0.2, r, a, p, 10), p.region_length);
}

TEST(UpdateLineSpacing, CapacityBinding) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 3000, 100, 0.0), Lattice::of(p));
  const Grid2 b(p.nx, p.ny, 0.3);
  const auto rates = agency_rates(10, 20);
  const auto r = local_rates(b, a, p, rates);
  const int i = 7, K = 10;
  const double hp = 0.3, hd = 0.2;
  const double s = update_line_spacing(i, hp, hd, r, a, p, K);
  EXPECT_NEAR(s, K / (a.column_p[i] * hp), 1e-12);
  DesignGrid d = DesignGrid::uniform(a.lattice, hp, hd, 0.3, 0.3, K);
  const double oracle_s =
      oracle::argmin([&](double v) { return oracle::slice_s(d, a, p, rates, i, v); }, 1e-6, K / (a.column_p[i] * hp));
  EXPECT_LE(rel(s, oracle_s), 1e-6);
}

TEST(UpdateLineSpacing, MatchesOneDimensionalMinimizer) {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const auto& p = inst.params;
    const auto d = oracle::random_feasible_design(inst.tables, p, inst.capacity, Coordination::none, rng);
    const auto rates = local_rates(d.b, inst.tables, p, inst.rates);
    const int i = std::uniform_int_distribution<int>(0, p.nx - 1)(rng);
    const double s = update_line_spacing(i, d.hp[i], d.hd[i], rates, inst.tables, p, inst.capacity);
    double upper = p.region_length;
    if (inst.tables.column_p[i] > 0) upper = std::min(upper, inst.capacity / (inst.tables.column_p[i] * d.hp[i]));
    if (inst.tables.column_d[i] > 0) upper = std::min(upper, inst.capacity / (inst.tables.column_d[i] * d.hd[i]));
    const double o = oracle::argmin([&](double v) { return oracle::slice_s(d, inst.tables, p, inst.rates, i, v); },
                                    1e-6 * upper, upper);
    EXPECT_LE(rel(s, o), 1e-6) << "trial " << trial;
  }
}

TEST(UpdateStopSpacing, NoLocalDemandGivesWidth) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 0, 0, 0.3), Lattice::of(p));
  EXPECT_EQ(update_stop_spacing(3, 3, 0.5, 0.2, 0.2, a, p, agency_rates(10, 20)), p.region_width);
}

TEST(UpdateStopSpacing, MatchesOneDimensionalMinimizer) {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const auto& p = inst.params;
    const auto d = oracle::random_feasible_design(inst.tables, p, inst.capacity, Coordination::none, rng);
    const int i = std::uniform_int_distribution<int>(0, p.nx - 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, p.ny - 1)(rng);
    const double b = update_stop_spacing(i, j, d.s[i], d.hp[i], d.hd[i], inst.tables, p, inst.rates);
    const double o = oracle::argmin(
        [&](double v) { return oracle::slice_b(d, inst.tables, p, inst.rates, i, j, v); }, 1e-9 * p.region_width,
        p.region_width);
    EXPECT_LE(rel(b, o), 1e-6) << "trial " << trial;
  }
}

TEST(UpdateStopSpacing, RejectsNonPositiveInputs) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  EXPECT_THROW(update_stop_spacing(0, 0, 0, 0.2, 0.2, a, p, agency_rates(10, 20)), InvalidParameter);
}

TEST(SolveDesign, ZeroDemandGoesToTheBounds) {
  const ModelParams p;
  const auto a = aggregates(uniform_field(p, 0, 0, 0.3), Lattice::of(p));
  const auto rep = solve_design(p, a, agency_rates(10, 20), 10, Coordination::none);
  ASSERT_TRUE(rep.converged);
  ASSERT_FALSE(rep.history.empty());
  EXPECT_LE(rep.outer_iterations, 2);
  for (int i = 0; i < p.nx; ++i) {
    EXPECT_EQ(rep.design.hp[i], p.max_headway);
    EXPECT_EQ(rep.design.hd[i], p.max_headway);
    EXPECT_EQ(rep.design.s[i], p.region_length);
    for (int j = 0; j < p.ny; ++j) EXPECT_EQ(rep.design.b(i, j), p.region_width);
  }
}

TEST(SolveDesign, StandardScenarioAtTen) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto rep = solve_design(p, a, agency_rates(10, 20), 10, Coordination::none);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rel(rep.cost.generalized, 564.68), 0.02) << rep.cost.generalized;
}

TEST(SolveDesign, ConvergedDesignIsAFixedPointWithinBounds) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto rates = agency_rates(10, 20);
  for (auto mode : {Coordination::none, Coordination::collect, Coordination::distribute, Coordination::both}) {
    const auto rep = solve_design(p, a, rates, 10, mode);
    ASSERT_TRUE(rep.converged) << to_string(mode);
    const auto& d = rep.design;
    EXPECT_TRUE(constraint_violations(d, a, p).empty()) << to_string(mode);
    const auto lr = local_rates(d.b, a, p, rates, mode);
    for (int i = 0; i < p.nx; ++i) {
      const auto h = update_headways(i, d.s[i], lr, a, p, 10, mode);
      EXPECT_LT(std::abs(h.hp - d.hp[i]), p.tolerance);
      EXPECT_LT(std::abs(h.hd - d.hd[i]), p.tolerance);
      EXPECT_LT(std::abs(update_line_spacing(i, d.hp[i], d.hd[i], lr, a, p, 10, mode) - d.s[i]), p.tolerance);
      for (int j = 0; j < p.ny; ++j)
        EXPECT_LT(std::abs(update_stop_spacing(i, j, d.s[i], d.hp[i], d.hd[i], a, p, rates) - d.b(i, j)), p.tolerance);
    }
  }
}

TEST(SolveDesign, CoordinationConstraintsHoldExactly) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto rep = solve_design(p, a, agency_rates(10, 20), 10, Coordination::both);
  for (int i = 0; i < p.nx; ++i) {
    EXPECT_EQ(rep.design.hd[i], p.trunk_headway);
    const double k = rep.design.hp[i] / p.trunk_headway;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(SolveDesign, LocalOptimumUnderPerturbation) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto rates = agency_rates(10, 20);
  const auto rep = solve_design(p, a, rates, 10, Coordination::none);
  const auto bad = oracle::perturbation_failures(rep.design, a, p, rates);
  EXPECT_TRUE(bad.empty()) << bad.size() << " failures, first: " << (bad.empty() ? "" : bad.front());
}

TEST(SolveDesign, Deterministic) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto r1 = solve_design(p, a, agency_rates(10, 20), 10, Coordination::none);
  const auto r2 = solve_design(p, a, agency_rates(10, 20), 10, Coordination::none);
  EXPECT_TRUE(r1.design == r2.design);
  EXPECT_EQ(r1.cost.generalized, r2.cost.generalized);
  EXPECT_EQ(r1.outer_iterations, r2.outer_iterations);
}

TEST(SolveDesign, RandomStartsAgree) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto rates = agency_rates(10, 20);
  std::vector<double> gcs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SolveOptions opt;
    opt.initial = random_initial_design(p, a.lattice, 10, Coordination::none, seed);
    const auto rep = solve_design(p, a, rates, 10, Coordination::none, opt);
    ASSERT_TRUE(rep.converged);
    gcs.push_back(rep.cost.generalized);
  }
  const auto [lo, hi] = std::minmax_element(gcs.begin(), gcs.end());
  EXPECT_LE((*hi - *lo) / *lo, 0.005);
}

TEST(SolveDesign, MoreDemandNeverLengthensInteriorHeadways) {
  const ModelParams p;
  const auto a1 = aggregates(standard_field(p, 1.0), Lattice::of(p));
  const auto a2 = aggregates(standard_field(p, 2.0), Lattice::of(p));
  const auto rates = agency_rates(80, 20);
  const auto r1 = solve_design(p, a1, rates, 80, Coordination::none);
  const auto r2 = solve_design(p, a2, rates, 80, Coordination::none);
  ASSERT_TRUE(r1.converged && r2.converged);
  int interior = 0;
  for (int i = 0; i < p.nx; ++i) {
    const double h = r1.design.hp[i];
    const double cap = 80 / (a1.column_p[i] * r1.design.s[i]);
    if (h <= p.min_headway * (1 + 1e-9) || h >= p.max_headway * (1 - 1e-9) || h >= cap * (1 - 1e-9)) continue;
    ++interior;
    EXPECT_LE(r2.design.hp[i], h * (1 + 1e-9)) << "i=" << i;
  }
  EXPECT_GT(interior, 0);
}

TEST(SolveDesign, RejectsBadInputs) {
  ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  EXPECT_THROW(solve_design(p, a, agency_rates(10, 20), 0, Coordination::none), InvalidParameter);
  p.tolerance = 0;
  EXPECT_THROW(solve_design(p, a, agency_rates(10, 20), 10, Coordination::none), InvalidParameter);
}

TEST(SolveDesign, IterationCapReportsNonConvergence) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  SolveOptions opt;
  opt.max_outer = 1;
  const auto rep = solve_design(p, a, agency_rates(10, 20), 10, Coordination::none, opt);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.history.size(), 1u);
}

TEST(VehicleSize, CurveFlattensForLargeVehicles) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto v = optimize_vehicle_size(p, a, Coordination::none, 0);
  const double best = v.report.cost.generalized;
  auto at = [&](int K) { return v.curve[K - p.min_capacity].generalized; };
  EXPECT_LT(at(40) - best, at(4) - best);
  for (const auto& c : v.curve)
    if (c.converged) EXPECT_GE(c.generalized, best);
}

TEST(VehicleSize, StandardScenario) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto v = optimize_vehicle_size(p, a, Coordination::none, 0);
  EXPECT_LE(std::abs(v.capacity - 9), 2) << "K* = " << v.capacity;
  EXPECT_LE(rel(v.report.cost.generalized, 564.39), 0.02) << v.report.cost.generalized;
}

TEST(VehicleSize, ConcentratedDemand) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p, 1.0, 0.125), Lattice::of(p));
  const auto v = optimize_vehicle_size(p, a, Coordination::none, 0);
  EXPECT_EQ(v.capacity, 8);
}

TEST(VehicleSize, TiesGoToTheSmallerVehicle) {
  const auto v = search_capacity(3, 7, [](int) {
    SolveReport r;
    r.converged = true;
    r.cost.generalized = 100;
    return r;
  });
  EXPECT_EQ(v.capacity, 3);
}

TEST(VehicleSize, EmptyRange) {
  EXPECT_THROW(search_capacity(8, 4, [](int) { return SolveReport{}; }), InvalidParameter);
}

TEST(VehicleSize, NothingConverges) {
  EXPECT_THROW(search_capacity(1, 3, [](int) { return SolveReport{}; }), SolveFailure);
}

TEST(VehicleSize, LineSpacingSmallestNearTerminal) {
  const ModelParams p;
  const auto a = aggregates(standard_field(p), Lattice::of(p));
  const auto v = optimize_vehicle_size(p, a, Coordination::none, 0);
  const auto& s = v.report.design.s;
  EXPECT_EQ(std::min_element(s.begin(), s.end()) - s.begin(), 0);
}
