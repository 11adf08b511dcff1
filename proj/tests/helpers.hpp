#pragma once

// Small shared helpers for the test suites: dataset builders and the
// finite-difference gradient oracle used to check analytic gradients.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spfkit/types.hpp"

namespace testutil {

struct SegmentSpec {
    double aadt = 1000;
    double length = 1.0;
    int years = 5;
    long long crashes = 0;
    std::string region = "R1";
    std::map<std::string, double> covariates;
    std::vector<double> cmfs;
};

inline spfkit::Dataset make_dataset(const std::vector<SegmentSpec>& segments) {
    spfkit::Dataset data;
    data.provenance = {"<test>", segments.size()};
    int i = 0;
    for (const auto& s : segments) {
        spfkit::SegmentRecord rec;
        rec.segment_id = "s" + std::to_string(++i);
        rec.region = s.region;
        rec.aadt = s.aadt;
        rec.length_miles = s.length;
        rec.years = s.years;
        rec.crash_count = s.crashes;
        rec.covariates = s.covariates;
        rec.cmfs = s.cmfs;
        data.records.push_back(std::move(rec));
    }
    return data;
}

/// Central finite differences of a scalar function; the oracle against which
/// analytic gradients are checked.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h_scale = 5e-6) {
    Eigen::VectorXd g(x.size());
    for (int j = 0; j < x.size(); ++j) {
        const double h = h_scale * std::max(1.0, std::fabs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        g(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double max_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    double worst = 0;
    for (int j = 0; j < got.size(); ++j) {
        const double denom = std::max(1.0, std::fabs(want(j)));
        worst = std::max(worst, std::fabs(got(j) - want(j)) / denom);
    }
    return worst;
}

}  // namespace testutil
