#pragma once

#include <string>
#include <vector>

#include "spfkit/types.hpp"

namespace spfkit {

/// Log of the base crash rate per million vehicle-miles built into the
/// rural two-lane baseline model.
inline constexpr double kHsmBaseLogRate = -0.312;

enum class RateKind { vmt, per_mile };
enum class GroupBy { all, region };

struct RateSummary {
    std::string group;
    int n = 0;
    double mean = 0, sd = 0, min = 0, max = 0;
};

struct CalibrationResult {
    std::string group;
    int n = 0;
    double c_base = 0;  // sum_observed / sum_predicted_base
    double c_adj = 0;   // sum_observed / sum_predicted_adjusted
    double sum_observed = 0;
    double sum_predicted_base = 0;
    double sum_predicted_adjusted = 0;
};

/// Crashes per 100-million vehicle-miles: c * 1e8 / (v * 365 * n * l).
double crash_rate_vmt(double crashes, double aadt, double years, double length_miles);

/// Crashes per mile of segment per year: c / (n * l).
double crash_rate_per_mile(double crashes, double years, double length_miles);

/// Per-group sample statistics of per-segment crash rates. Sample sd uses the
/// n-1 denominator; a single-member group reports sd = 0.
std::vector<RateSummary> rate_summary(const Dataset& data, RateKind kind, GroupBy group_by);

/// Expected crashes over `years` under base conditions:
/// years * aadt * l * 365e-6 * exp(kHsmBaseLogRate).
double hsm_base_prediction(double aadt, double length_miles, double years);

/// Multiplies a base prediction by the product of all CMFs.
double apply_cmfs(double n_spf, const std::vector<double>& cmfs);

/// Per-group calibration: c = sum(observed) / sum(predicted), computed both
/// against base predictions (c_base) and CMF-adjusted predictions (c_adj).
std::vector<CalibrationResult> calibration_factor(const Dataset& data, GroupBy group_by);

/// Calibrated baseline prediction: c * hsm_base_prediction(...).
double calibrated_prediction(double aadt, double length_miles, double years, double c);

}  // namespace spfkit
