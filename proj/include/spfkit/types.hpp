#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace spfkit {

/// One homogeneous road segment: exposure inputs, covariates, observed
/// crashes, and crash-modification factors.
struct SegmentRecord {
    std::string segment_id;
    std::string region;
    double aadt = 0.0;          // vehicles/day, averaged over the study period
    double length_miles = 0.0;  // segment length in miles
    int years = 1;              // study-period length in years
    std::int64_t crash_count = 0;
    std::map<std::string, double> covariates;  // named, e.g. shoulder_width
    std::vector<double> cmfs;                  // multiplicative, may be empty
};

struct Provenance {
    std::string source;
    std::size_t row_count = 0;
};

struct Dataset {
    std::vector<SegmentRecord> records;
    Provenance provenance;
    std::vector<std::string> warnings;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

enum class Family { poisson, nb };
enum class Response { total, per_year };

/// Distribution family, functional form, covariate roles, and simulation
/// settings for one model.
///
/// Functional forms:
///   1 - intercept only with log-exposure offset
///   2 - intercept, ln AADT, ln length
///   3 - intercept plus named covariates (all coefficients fixed)
///   4 - as form 3 but with `random` covariates given normally distributed
///       coefficients, estimated by maximum simulated likelihood
struct ModelSpec {
    Family family = Family::poisson;
    int form = 2;
    std::vector<std::string> covariates;  // fixed-coefficient covariates (forms 3-4)
    std::vector<std::string> random;      // random-coefficient covariates (form 4)
    int draws = 200;                      // Halton draws per observation
    int skip = 10;                        // leading Halton points discarded
    std::uint64_t seed = 0;               // used by splitting/simulation, not by Halton
    double tol = 1e-6;                    // gradient max-norm stopping tolerance
    int max_iter = 200;
    Response response = Response::total;
};

/// Response, offset, and named design columns for one functional form.
/// X always carries a leading intercept column of ones; Z holds the
/// random-coefficient columns (empty unless form 4).
struct DesignMatrix {
    Eigen::VectorXd y;       // integer counts, stored as doubles
    Eigen::VectorXd offset;  // natural-log scale, zero where unused
    Eigen::MatrixXd X;
    std::vector<std::string> x_names;
    Eigen::MatrixXd Z;
    std::vector<std::string> z_names;
    std::vector<std::string> segment_ids;
    int n_obs = 0;
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

}  // namespace spfkit
