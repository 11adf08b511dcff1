#include "spfkit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"

namespace spfkit {

double crash_rate_vmt(double crashes, double aadt, double years, double length_miles) {
    if (crashes < 0) throw DomainError("crash_rate_vmt: crashes must be non-negative");
    if (aadt <= 0 || years < 1 || length_miles <= 0)
        throw DomainError("crash_rate_vmt: aadt, years, and length must be positive");
    return crashes * 1e8 / (aadt * 365.0 * years * length_miles);
}

double crash_rate_per_mile(double crashes, double years, double length_miles) {
    if (crashes < 0) throw DomainError("crash_rate_per_mile: crashes must be non-negative");
    if (years < 1 || length_miles <= 0)
        throw DomainError("crash_rate_per_mile: years and length must be positive");
    return crashes / (years * length_miles);
}

namespace {

// Groups records by region label (or one "all" group), preserving first-seen
// group order.
std::vector<std::pair<std::string, std::vector<const SegmentRecord*>>> group_records(
    const Dataset& data, GroupBy group_by) {
    std::vector<std::pair<std::string, std::vector<const SegmentRecord*>>> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& rec : data.records) {
        const std::string key = group_by == GroupBy::all ? "all" : rec.region;
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) groups.push_back({key, {}});
        groups[it->second].second.push_back(&rec);
    }
    return groups;
}

}  // namespace

std::vector<RateSummary> rate_summary(const Dataset& data, RateKind kind, GroupBy group_by) {
    if (data.empty()) throw ArgumentError("rate_summary: dataset is empty");
    std::vector<RateSummary> out;
    for (const auto& [label, members] : group_records(data, group_by)) {
        RateSummary s;
        s.group = label;
        s.n = static_cast<int>(members.size());
        std::vector<double> rates;
        rates.reserve(members.size());
        for (const auto* rec : members) {
            const double c = static_cast<double>(rec->crash_count);
            rates.push_back(kind == RateKind::vmt
                                ? crash_rate_vmt(c, rec->aadt, rec->years, rec->length_miles)
                                : crash_rate_per_mile(c, rec->years, rec->length_miles));
        }
        double sum = 0;
        for (const double r : rates) sum += r;
        s.mean = sum / s.n;
        s.min = *std::min_element(rates.begin(), rates.end());
        s.max = *std::max_element(rates.begin(), rates.end());
        if (s.n > 1) {
            double ss = 0;
            for (const double r : rates) ss += (r - s.mean) * (r - s.mean);
            s.sd = std::sqrt(ss / (s.n - 1));
        }
        out.push_back(s);
    }
    return out;
}

double hsm_base_prediction(double aadt, double length_miles, double years) {
    if (aadt <= 0 || length_miles <= 0 || years < 1)
        throw DomainError("hsm_base_prediction: aadt, length, and years must be positive");
    return exposure(aadt, length_miles, years) * std::exp(kHsmBaseLogRate);
}

double apply_cmfs(double n_spf, const std::vector<double>& cmfs) {
    if (n_spf < 0) throw DomainError("apply_cmfs: prediction must be non-negative");
    double out = n_spf;
    for (const double cmf : cmfs) {
        if (cmf <= 0) throw DomainError("apply_cmfs: every CMF must be positive");
        out *= cmf;
    }
    return out;
}

std::vector<CalibrationResult> calibration_factor(const Dataset& data, GroupBy group_by) {
    if (data.empty()) throw ArgumentError("calibration_factor: dataset is empty");
    std::vector<CalibrationResult> out;
    for (const auto& [label, members] : group_records(data, group_by)) {
        CalibrationResult r;
        r.group = label;
        r.n = static_cast<int>(members.size());
        for (const auto* rec : members) {
            const double base = hsm_base_prediction(rec->aadt, rec->length_miles, rec->years);
            r.sum_observed += static_cast<double>(rec->crash_count);
            r.sum_predicted_base += base;
            r.sum_predicted_adjusted += apply_cmfs(base, rec->cmfs);
        }
        if (r.sum_predicted_base <= 0 || r.sum_predicted_adjusted <= 0)
            throw ComputationError("calibration_factor: predicted sum is zero for group '" +
                                   label + "'");
        r.c_base = r.sum_observed / r.sum_predicted_base;
        r.c_adj = r.sum_observed / r.sum_predicted_adjusted;
        out.push_back(r);
    }
    return out;
}

double calibrated_prediction(double aadt, double length_miles, double years, double c) {
    if (c <= 0) throw DomainError("calibrated_prediction: calibration factor must be positive");
    return c * hsm_base_prediction(aadt, length_miles, years);
}

}  // namespace spfkit
