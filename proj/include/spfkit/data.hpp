#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "spfkit/types.hpp"

namespace spfkit {

/// Maps canonical field names onto CSV column names. CMFs may arrive either
/// as one semicolon-joined column (`cmfs`) or as numbered columns
/// cmf_prefix + "1", cmf_prefix + "2", ... ; both empty means no CMFs.
struct ColumnSchema {
    std::string segment_id = "segment_id";
    std::string region;           // optional; empty -> records get region ""
    bool region_required = true;  // false: silently skip a missing region column
    std::string aadt = "aadt";
    std::string length_miles = "length_miles";
    std::string years = "years";
    std::string crash_count = "crash_count";
    std::map<std::string, std::string> covariates;  // canonical name -> column
    std::vector<std::string> indicators;            // covariates restricted to {0,1}
    std::string cmfs;
    std::string cmf_prefix;
    // When set, every header column not claimed above becomes a covariate
    // keyed by its own name.
    bool auto_covariates = false;
};

/// Loads and validates segment records. Row order is preserved. Throws
/// SchemaError for a missing column, ParseError (with the 1-based data row
/// index) for a non-numeric cell, and ValidationError listing offending
/// segment_ids for invariant violations.
Dataset load_segments(const std::string& path, const ColumnSchema& schema);

/// As load_segments but from in-memory CSV text.
Dataset load_segments_text(const std::string& text, const ColumnSchema& schema,
                           const std::string& source_label = "<memory>");

/// Deterministic random partition. The permutation comes from a Fisher-Yates
/// shuffle driven by SplitMix64(seed) with rejection-sampled bounded draws;
/// that algorithm is part of the file-format contract so partitions reproduce
/// across implementations. The train side receives round(train_fraction * n)
/// records; both sides keep original record order.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed);

/// Builds the response, offset, and design columns for spec.form.
///
/// Derived covariate names understood in forms 3-4, besides any name present
/// in SegmentRecord::covariates: "aadt" (vehicles/day), "aadt_thousands",
/// "length" (miles), "ln_aadt", "ln_length".
DesignMatrix build_design(const Dataset& data, const ModelSpec& spec);

/// Study-period exposure in million vehicle-miles: aadt * length * 365e-6,
/// scaled by `years`.
double exposure(double aadt, double length_miles, double years);

}  // namespace spfkit
