#include "spfkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "spfkit/csv.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"

namespace spfkit {

double exposure(double aadt, double length_miles, double years) {
    return aadt * length_miles * 365.0 * 1e-6 * years;
}

namespace {

int require_column(const csv::Table& table, const std::string& name,
                   const std::string& field) {
    const int idx = table.column(name);
    if (idx < 0)
        throw SchemaError("schema: required column '" + name + "' (field '" + field +
                          "') not found in header");
    return idx;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + cell + "' as a number");
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    if (pos != cell.size())
        throw ParseError("row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + cell + "' as a number");
    return value;
}

bool is_integer(double v) { return std::floor(v) == v && std::isfinite(v); }

Dataset load_from_table(const csv::Table& table, const ColumnSchema& schema,
                        const std::string& source) {
    const int id_col = require_column(table, schema.segment_id, "segment_id");
    const int aadt_col = require_column(table, schema.aadt, "aadt");
    const int len_col = require_column(table, schema.length_miles, "length_miles");
    const int years_col = require_column(table, schema.years, "years");
    const int crash_col = require_column(table, schema.crash_count, "crash_count");
    int region_col = -1;
    if (!schema.region.empty())
        region_col = schema.region_required ? require_column(table, schema.region, "region")
                                            : table.column(schema.region);

    std::vector<std::pair<std::string, int>> cov_cols;
    for (const auto& [name, column] : schema.covariates)
        cov_cols.emplace_back(name, require_column(table, column, name));

    int cmfs_col = -1;
    if (!schema.cmfs.empty()) cmfs_col = require_column(table, schema.cmfs, "cmfs");
    std::vector<int> cmf_cols;
    if (!schema.cmf_prefix.empty()) {
        for (int k = 1;; ++k) {
            const int idx = table.column(schema.cmf_prefix + std::to_string(k));
            if (idx < 0) break;
            cmf_cols.push_back(idx);
        }
        if (cmf_cols.empty())
            throw SchemaError("schema: no columns matching prefix '" + schema.cmf_prefix + "'");
    }

    if (schema.auto_covariates) {
        std::set<int> claimed{id_col, aadt_col, len_col, years_col, crash_col};
        if (region_col >= 0) claimed.insert(region_col);
        if (cmfs_col >= 0) claimed.insert(cmfs_col);
        for (const int c : cmf_cols) claimed.insert(c);
        for (const auto& pr : cov_cols) claimed.insert(pr.second);
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (!claimed.count(static_cast<int>(c)))
                cov_cols.emplace_back(table.header[c], static_cast<int>(c));
    }

    Dataset data;
    data.provenance = {source, table.rows.size()};
    std::vector<std::string> bad_ids;
    std::set<std::string> seen_ids;
    std::vector<std::string> short_ids;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t row_no = r + 1;  // 1-based data row
        auto cell = [&](int col) -> const std::string& {
            static const std::string empty;
            return col >= 0 && static_cast<std::size_t>(col) < row.size() ? row[col] : empty;
        };

        SegmentRecord rec;
        rec.segment_id = cell(id_col);
        rec.region = region_col >= 0 ? cell(region_col) : "";
        rec.aadt = parse_number(cell(aadt_col), row_no, schema.aadt);
        rec.length_miles = parse_number(cell(len_col), row_no, schema.length_miles);
        const double years = parse_number(cell(years_col), row_no, schema.years);
        const double crashes = parse_number(cell(crash_col), row_no, schema.crash_count);

        for (const auto& [name, col] : cov_cols)
            rec.covariates[name] = parse_number(cell(col), row_no, name);

        if (cmfs_col >= 0 && !cell(cmfs_col).empty()) {
            std::stringstream ss(cell(cmfs_col));
            std::string piece;
            while (std::getline(ss, piece, ';'))
                rec.cmfs.push_back(parse_number(piece, row_no, schema.cmfs));
        }
        for (const int col : cmf_cols)
            if (!cell(col).empty()) rec.cmfs.push_back(parse_number(cell(col), row_no, "cmf"));

        bool ok = rec.aadt > 0 && rec.length_miles > 0 && years >= 1 && is_integer(years) &&
                  crashes >= 0 && is_integer(crashes);
        for (const double cmf : rec.cmfs) ok = ok && cmf > 0;
        for (const auto& name : schema.indicators) {
            const auto it = rec.covariates.find(name);
            if (it != rec.covariates.end() && it->second != 0.0 && it->second != 1.0) ok = false;
        }
        if (rec.segment_id.empty() || !seen_ids.insert(rec.segment_id).second) ok = false;

        if (!ok) {
            bad_ids.push_back(rec.segment_id.empty() ? "<row " + std::to_string(row_no) + ">"
                                                     : rec.segment_id);
            continue;
        }
        rec.years = static_cast<int>(years);
        rec.crash_count = static_cast<std::int64_t>(crashes);
        if (rec.length_miles < 0.1) short_ids.push_back(rec.segment_id);
        data.records.push_back(std::move(rec));
    }

    if (!bad_ids.empty()) {
        std::string msg = "validation: invariant violations for segment_ids:";
        for (const auto& id : bad_ids) msg += " " + id;
        throw ValidationError(msg);
    }
    if (!short_ids.empty()) {
        std::string msg = "segments shorter than 0.1 mi accepted:";
        for (const auto& id : short_ids) msg += " " + id;
        data.warnings.push_back(msg);
    }
    return data;
}

}  // namespace

Dataset load_segments(const std::string& path, const ColumnSchema& schema) {
    return load_from_table(csv::read_file(path), schema, path);
}

Dataset load_segments_text(const std::string& text, const ColumnSchema& schema,
                           const std::string& source_label) {
    return load_from_table(csv::parse(text), schema, source_label);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed) {
    if (data.empty()) throw ArgumentError("split: dataset is empty");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("split: train_fraction must lie in (0,1)");

    const std::size_t n = data.size();
    const auto n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    const auto perm = seeded_permutation(n, seed);

    std::vector<bool> in_train(n, false);
    for (std::size_t k = 0; k < n_train; ++k) in_train[perm[k]] = true;

    Dataset train, test;
    train.provenance = {data.provenance.source + "#train", 0};
    test.provenance = {data.provenance.source + "#test", 0};
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).records.push_back(data.records[i]);
    train.provenance.row_count = train.size();
    test.provenance.row_count = test.size();
    return {std::move(train), std::move(test)};
}

namespace {

double covariate_value(const SegmentRecord& rec, const std::string& name) {
    if (name == "aadt") return rec.aadt;
    if (name == "aadt_thousands") return rec.aadt / 1000.0;
    if (name == "length") return rec.length_miles;
    if (name == "ln_aadt") {
        if (rec.aadt <= 0)
            throw DomainError("build_design: ln of non-positive aadt at segment " + rec.segment_id);
        return std::log(rec.aadt);
    }
    if (name == "ln_length") {
        if (rec.length_miles <= 0)
            throw DomainError("build_design: ln of non-positive length at segment " +
                              rec.segment_id);
        return std::log(rec.length_miles);
    }
    const auto it = rec.covariates.find(name);
    if (it == rec.covariates.end())
        throw ArgumentError("build_design: unknown covariate '" + name + "' (segment " +
                            rec.segment_id + ")");
    return it->second;
}

}  // namespace

DesignMatrix build_design(const Dataset& data, const ModelSpec& spec) {
    if (data.empty()) throw ArgumentError("build_design: dataset is empty");
    if (spec.form < 1 || spec.form > 4)
        throw ArgumentError("build_design: form must be 1, 2, 3, or 4");

    const int n = static_cast<int>(data.size());
    DesignMatrix d;
    d.n_obs = n;
    d.y.resize(n);
    d.offset = Eigen::VectorXd::Zero(n);
    d.segment_ids.reserve(n);
    for (int i = 0; i < n; ++i) {
        d.y(i) = static_cast<double>(data.records[i].crash_count);
        d.segment_ids.push_back(data.records[i].segment_id);
    }

    switch (spec.form) {
        case 1: {
            d.x_names = {"const"};
            d.X = Eigen::MatrixXd::Ones(n, 1);
            for (int i = 0; i < n; ++i) {
                const auto& rec = data.records[i];
                const double years_scale =
                    spec.response == Response::total ? static_cast<double>(rec.years) : 1.0;
                const double e = exposure(rec.aadt, rec.length_miles, years_scale);
                if (e <= 0)
                    throw DomainError("build_design: non-positive exposure at segment " +
                                      rec.segment_id);
                d.offset(i) = std::log(e);
            }
            break;
        }
        case 2: {
            d.x_names = {"const", "ln_aadt", "ln_length"};
            d.X.resize(n, 3);
            for (int i = 0; i < n; ++i) {
                const auto& rec = data.records[i];
                d.X(i, 0) = 1.0;
                d.X(i, 1) = covariate_value(rec, "ln_aadt");
                d.X(i, 2) = covariate_value(rec, "ln_length");
            }
            break;
        }
        case 3:
        case 4: {
            const auto& fixed = spec.covariates;
            const auto& random = spec.form == 4 ? spec.random : std::vector<std::string>{};
            d.x_names = {"const"};
            for (const auto& name : fixed) d.x_names.push_back(name);
            d.z_names = random;
            d.X.resize(n, 1 + static_cast<int>(fixed.size()));
            d.Z.resize(n, static_cast<int>(random.size()));
            for (int i = 0; i < n; ++i) {
                const auto& rec = data.records[i];
                d.X(i, 0) = 1.0;
                for (std::size_t j = 0; j < fixed.size(); ++j)
                    d.X(i, 1 + static_cast<int>(j)) = covariate_value(rec, fixed[j]);
                for (std::size_t j = 0; j < random.size(); ++j)
                    d.Z(i, static_cast<int>(j)) = covariate_value(rec, random[j]);
            }
            break;
        }
    }
    if (d.Z.size() == 0) d.Z.resize(n, 0);
    return d;
}

const char* family_name(Family f) { return f == Family::poisson ? "poisson" : "nb"; }

Family family_from_name(const std::string& name) {
    if (name == "poisson") return Family::poisson;
    if (name == "nb" || name == "negative_binomial") return Family::nb;
    throw ArgumentError("unknown family '" + name + "' (expected poisson|nb)");
}

}  // namespace spfkit
