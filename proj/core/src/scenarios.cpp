#include "crtnd/simulation.hpp"

namespace crtnd {

namespace {

// Synthetic 24-cluster baselines with totals comparable to a mid-sized
// dengue trial. X is a positive cluster-level covariate.
const std::vector<double> kCovariate = {1.29, 1.15, 1.40, 0.99, 0.83, 1.71, 1.49, 1.26, 1.61, 1.52, 1.18, 1.34,
                                        1.22, 0.89, 1.48, 0.72, 1.09, 1.38, 1.04, 1.03, 0.73, 0.89, 0.86, 1.35};
const std::vector<double> kBaselineY = {50, 82, 148, 64, 87, 34, 207, 63,  137, 134, 82, 96,
                                        147, 70, 67, 58, 232, 84, 50, 147, 37, 81, 74, 94};
const std::vector<double> kBaselineZ = {150, 208, 669, 139, 117, 165, 285, 75,  235, 169, 157, 225,
                                        73,  74,  142, 182, 323, 327, 125, 193, 56,  330, 239, 293};

// Per-period test-positive baselines, 24 clusters x 9 periods.
const double kBaselineYPeriods[24][9] = {
    {32, 22, 45, 29, 19, 65, 108, 31, 37},       {207, 95, 190, 75, 57, 135, 98, 82, 72},
    {11, 7, 29, 24, 17, 45, 94, 92, 135},        {377, 182, 351, 210, 61, 116, 120, 59, 62},
    {45, 31, 77, 118, 25, 101, 133, 57, 87},     {50, 24, 51, 27, 15, 41, 55, 32, 43},
    {336, 163, 535, 204, 116, 231, 378, 215, 233}, {20, 13, 38, 25, 20, 27, 109, 30, 73},
    {670, 378, 907, 333, 198, 533, 302, 96, 92}, {277, 180, 263, 101, 82, 308, 294, 79, 97},
    {131, 60, 116, 94, 42, 84, 136, 65, 101},    {16, 14, 37, 17, 16, 37, 105, 53, 93},
    {168, 57, 197, 126, 80, 154, 200, 111, 184}, {37, 14, 60, 33, 20, 49, 92, 46, 44},
    {571, 187, 356, 150, 105, 182, 244, 56, 43}, {206, 136, 278, 79, 65, 68, 123, 50, 75},
    {67, 45, 93, 81, 39, 193, 220, 123, 346},    {200, 77, 215, 115, 68, 93, 167, 64, 73},
    {55, 40, 90, 28, 19, 53, 100, 38, 55},       {81, 44, 130, 107, 39, 110, 166, 94, 168},
    {357, 141, 235, 83, 44, 43, 107, 30, 38},    {300, 137, 223, 169, 80, 97, 179, 98, 76},
    {74, 31, 160, 45, 21, 106, 140, 54, 73},     {469, 243, 416, 201, 89, 201, 185, 84, 54},
};

}  // namespace

SimScenario default_parallel_scenario() {
  SimScenario s;
  s.id = "parallel_default";
  s.design = SimScenario::Design::parallel;
  s.baseline_y = kBaselineY;
  s.baseline_z = kBaselineZ;
  s.covariate = kCovariate;
  s.treated = 12;
  s.covariate_coupling = true;
  s.replicates = 10'000;
  s.seed = 20211;
  return s;
}

SimScenario default_sw_scenario() {
  SimScenario s;
  s.id = "stepped_wedge_default";
  s.design = SimScenario::Design::stepped_wedge;
  s.baseline_y_periods.resize(24, 9);
  for (int i = 0; i < 24; ++i) {
    for (int t = 0; t < 9; ++t) s.baseline_y_periods(i, t) = kBaselineYPeriods[i][t];
  }
  s.baseline_z = kBaselineZ;
  s.starts_per_period = {0, 3, 3, 3, 3, 3, 3, 3, 3};
  s.covariate_coupling = false;
  s.replicates = 5'000;
  s.seed = 20212;
  return s;
}

SimScenario default_dose_response_scenario() {
  SimScenario s = default_parallel_scenario();
  s.id = "dose_response_default";
  s.dose = DoseDesign{};
  s.replicates = 1'000;
  s.seed = 20213;
  return s;
}

}  // namespace crtnd
