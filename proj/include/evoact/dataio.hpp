#pragma once

// CSV loading, one-hot encoding, train-fitted scaling, fixed experiment splits and
// small synthetic datasets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evoact/error.hpp"
#include "evoact/rng.hpp"

namespace evoact {

enum class TargetKind { binary, multiclass, regression };
enum class Scaling { minmax_01, standardize };

struct DatasetSchema {
    std::string target;
    TargetKind kind = TargetKind::binary;
    std::vector<std::string> categorical;
    Scaling scaling = Scaling::standardize;
    // Optional explicit class order; the last of two binary labels is the positive class.
    std::vector<std::string> classes;
    std::vector<std::string> ignore;
};

struct Dataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y; // class index for classification, value for regression
    std::vector<std::string> feature_names;
    TargetKind kind = TargetKind::binary;
    int n_classes = 2; // 1 for regression
    std::vector<std::string> class_labels;

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
};

struct Samples {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
};

// RFC-4180 records: quoted fields may hold commas, doubled quotes and newlines.
[[nodiscard]] inline std::vector<std::vector<std::string>> read_csv_records(std::istream& in)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    char c;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw DataError(DataError::Kind::malformed, "unterminated quoted field at end of file");
    if (field_started || !record.empty()) end_record();
    return records;
}

inline std::string csv_escape(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string cell_ref(std::size_t row, const std::string& column)
{
    return "row " + std::to_string(row) + ", column '" + column + "'";
}

} // namespace detail

// Numeric matrix plus target vector. Categorical columns are one-hot expanded in place
// (levels sorted); empty cells are rejected.
[[nodiscard]] inline Dataset load_csv(std::istream& in, const DatasetSchema& schema)
{
    auto records = read_csv_records(in);
    if (records.empty()) throw DataError(DataError::Kind::empty_file, "CSV input is empty");
    std::vector<std::string> header;
    for (const auto& h : records.front()) header.push_back(detail::trim(h));
    if (records.size() < 2) throw DataError(DataError::Kind::empty_file, "CSV input has a header but no data rows");

    auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(DataError::Kind::missing_column, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t target_col = column_of(schema.target);
    std::set<std::size_t> categorical;
    for (const auto& c : schema.categorical) {
        if (c == schema.target) throw DataError(DataError::Kind::malformed, "target column '" + c + "' listed as a feature");
        categorical.insert(column_of(c));
    }
    std::set<std::size_t> ignored;
    for (const auto& c : schema.ignore) ignored.insert(column_of(c));

    const std::size_t n = records.size() - 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size())
            throw DataError(DataError::Kind::malformed, "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                                           " fields, header has " + std::to_string(header.size()));
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (ignored.count(c) == 0 && detail::trim(records[r][c]).empty())
                throw DataError(DataError::Kind::missing_value, "missing value at " + detail::cell_ref(r, header[c]));
        }
    }

    // Feature layout.
    struct Column {
        std::size_t source;
        std::vector<std::string> levels; // empty for numeric
    };
    std::vector<Column> columns;
    std::size_t width = 0;
    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == target_col || ignored.count(c) != 0) continue;
        Column col{c, {}};
        if (categorical.count(c) != 0) {
            std::set<std::string> levels;
            for (std::size_t r = 1; r < records.size(); ++r) levels.insert(detail::trim(records[r][c]));
            col.levels.assign(levels.begin(), levels.end());
            for (const auto& l : col.levels) ds.feature_names.push_back(header[c] + "=" + l);
            width += col.levels.size();
        } else {
            ds.feature_names.push_back(header[c]);
            ++width;
        }
        columns.push_back(std::move(col));
    }

    ds.x.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = records[r + 1];
        Eigen::Index j = 0;
        for (const auto& col : columns) {
            const std::string cell = detail::trim(rec[col.source]);
            if (col.levels.empty()) {
                double v;
                if (!detail::parse_double(cell, v))
                    throw DataError(DataError::Kind::non_numeric_cell,
                                    "non-numeric cell '" + cell + "' at " + detail::cell_ref(r + 1, header[col.source]));
                ds.x(static_cast<Eigen::Index>(r), j++) = v;
            } else {
                const auto at = std::lower_bound(col.levels.begin(), col.levels.end(), cell) - col.levels.begin();
                ds.x(static_cast<Eigen::Index>(r), j + at) = 1.0;
                j += static_cast<Eigen::Index>(col.levels.size());
            }
        }
    }

    ds.kind = schema.kind;
    ds.y.resize(static_cast<Eigen::Index>(n));
    if (schema.kind == TargetKind::regression) {
        ds.n_classes = 1;
        for (std::size_t r = 0; r < n; ++r) {
            double v;
            const std::string cell = detail::trim(records[r + 1][target_col]);
            if (!detail::parse_double(cell, v))
                throw DataError(DataError::Kind::non_numeric_cell,
                                "non-numeric cell '" + cell + "' at " + detail::cell_ref(r + 1, schema.target));
            ds.y(static_cast<Eigen::Index>(r)) = v;
        }
        return ds;
    }

    std::vector<std::string> labels = schema.classes;
    if (labels.empty()) {
        std::set<std::string> seen;
        for (std::size_t r = 1; r < records.size(); ++r) seen.insert(detail::trim(records[r][target_col]));
        labels.assign(seen.begin(), seen.end());
        // Numeric labels sort by value.
        bool numeric = true;
        for (const auto& l : labels) {
            double v;
            numeric = numeric && detail::parse_double(l, v);
        }
        if (numeric) {
            std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
                double va = 0.0, vb = 0.0;
                detail::parse_double(a, va);
                detail::parse_double(b, vb);
                return va < vb;
            });
        }
    }
    if (schema.kind == TargetKind::binary && labels.size() != 2)
        throw DataError(DataError::Kind::malformed, "binary target '" + schema.target + "' has " + std::to_string(labels.size()) + " classes");
    if (schema.kind == TargetKind::multiclass && labels.size() < 2)
        throw DataError(DataError::Kind::malformed, "multiclass target '" + schema.target + "' needs at least two classes");
    for (std::size_t r = 0; r < n; ++r) {
        const std::string cell = detail::trim(records[r + 1][target_col]);
        const auto it = std::find(labels.begin(), labels.end(), cell);
        if (it == labels.end())
            throw DataError(DataError::Kind::malformed, "unknown class '" + cell + "' at " + detail::cell_ref(r + 1, schema.target));
        ds.y(static_cast<Eigen::Index>(r)) = static_cast<double>(it - labels.begin());
    }
    ds.n_classes = static_cast<int>(labels.size());
    ds.class_labels = std::move(labels);
    return ds;
}

[[nodiscard]] inline Dataset load_csv(const std::string& path, const DatasetSchema& schema)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataError::Kind::empty_file, "cannot open '" + path + "'");
    return load_csv(in, schema);
}

// Affine per-column transform fitted on training rows only.
struct Scaler {
    Scaling method = Scaling::standardize;
    Eigen::RowVectorXd offset;
    Eigen::RowVectorXd factor; // 0 for constant columns

    [[nodiscard]] static Scaler fit(const Eigen::MatrixXd& train, Scaling method)
    {
        if (train.rows() == 0) throw std::invalid_argument("Scaler::fit: empty training partition");
        Scaler s;
        s.method = method;
        const Eigen::Index d = train.cols();
        s.offset.resize(d);
        s.factor.resize(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto col = train.col(j);
            if (method == Scaling::minmax_01) {
                const double lo = col.minCoeff();
                const double range = col.maxCoeff() - lo;
                s.offset(j) = lo;
                s.factor(j) = range > 0.0 ? 1.0 / range : 0.0;
            } else {
                const double mean = col.mean();
                const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size());
                s.offset(j) = mean;
                s.factor(j) = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
            }
        }
        return s;
    }

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const
    {
        return (x.rowwise() - offset).array().rowwise() * factor.array();
    }
};

struct SplitSpec {
    double test_fraction = 0.25;
    double validation_fraction = 0.10;
    std::uint64_t seed = 42;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// One seeded shuffle fixes the test block for the whole experiment. The validation block is
// the last rows of the remaining pool (deterministic) or a fresh random draw from it.
// Sizes: |test| = floor(n * test_fraction); |train| = floor(|pool| * (1 - validation_fraction)).
class ExperimentSplit {
public:
    ExperimentSplit(std::size_t n, const SplitSpec& spec) : spec_(spec)
    {
        if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
            !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
            throw std::invalid_argument("split fractions must lie in (0,1)");
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        Rng rng = derive(spec.seed, {{"split", 0}});
        shuffle(perm, rng);
        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
        test_.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
        pool_.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
        n_train_ = static_cast<std::size_t>(std::floor(static_cast<double>(pool_.size()) * (1.0 - spec.validation_fraction)));
        if (test_.empty() || n_train_ == 0 || n_train_ == pool_.size())
            throw TooSmall("dataset of " + std::to_string(n) + " rows is too small for the requested split");
    }

    [[nodiscard]] const std::vector<std::size_t>& test() const noexcept { return test_; }
    [[nodiscard]] const std::vector<std::size_t>& pool() const noexcept { return pool_; }

    [[nodiscard]] SplitIndices split(bool deterministic, Rng& rng) const
    {
        std::vector<std::size_t> order = pool_;
        if (!deterministic) shuffle(order, rng);
        SplitIndices s;
        s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train_));
        s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train_), order.end());
        s.test = test_;
        return s;
    }

    [[nodiscard]] SplitIndices deterministic_split() const
    {
        Rng unused(0);
        return split(true, unused);
    }

private:
    SplitSpec spec_;
    std::vector<std::size_t> test_;
    std::vector<std::size_t> pool_;
    std::size_t n_train_ = 0;
};

[[nodiscard]] inline Samples take_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::size_t>& rows)
{
    Samples s;
    s.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    s.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        s.y(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
    }
    return s;
}

// A dataset scaled once (scaler fitted on the non-test pool) with its fixed split.
class ExperimentData {
public:
    ExperimentData(const Dataset& ds, Scaling scaling, const SplitSpec& spec)
        : split_(ds.rows(), spec), kind_(ds.kind), n_classes_(ds.n_classes), y_(ds.y)
    {
        const Samples pool = take_rows(ds.x, ds.y, split_.pool());
        scaler_ = Scaler::fit(pool.x, scaling);
        x_ = scaler_.apply(ds.x);
        test_ = take_rows(x_, y_, split_.test());
        const SplitIndices fixed = split_.deterministic_split();
        final_train_ = take_rows(x_, y_, fixed.train);
        final_validation_ = take_rows(x_, y_, fixed.validation);
    }

    // Random validation block, re-drawn from the pool on every call.
    [[nodiscard]] std::pair<Samples, Samples> search_split(Rng& rng) const
    {
        const SplitIndices s = split_.split(false, rng);
        return {take_rows(x_, y_, s.train), take_rows(x_, y_, s.validation)};
    }

    [[nodiscard]] const Samples& final_train() const noexcept { return final_train_; }
    [[nodiscard]] const Samples& final_validation() const noexcept { return final_validation_; }
    [[nodiscard]] const Samples& test() const noexcept { return test_; }
    [[nodiscard]] const Scaler& scaler() const noexcept { return scaler_; }
    [[nodiscard]] const ExperimentSplit& split() const noexcept { return split_; }
    [[nodiscard]] TargetKind kind() const noexcept { return kind_; }
    [[nodiscard]] int n_classes() const noexcept { return n_classes_; }
    [[nodiscard]] int input_dim() const noexcept { return static_cast<int>(x_.cols()); }

private:
    ExperimentSplit split_;
    TargetKind kind_;
    int n_classes_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Scaler scaler_;
    Samples test_;
    Samples final_train_;
    Samples final_validation_;
};

enum class SynthKind { xor_clusters, moons, sine_regression };

[[nodiscard]] inline std::string_view name(SynthKind k) noexcept
{
    switch (k) {
    case SynthKind::xor_clusters: return "xor";
    case SynthKind::moons: return "moons";
    case SynthKind::sine_regression: return "sine_regression";
    }
    return "?";
}

[[nodiscard]] inline SynthKind synth_kind_from_name(std::string_view s)
{
    for (SynthKind k : {SynthKind::xor_clusters, SynthKind::moons, SynthKind::sine_regression}) {
        if (name(k) == s) return k;
    }
    throw std::invalid_argument("unknown synthetic dataset '" + std::string(s) + "' (expected xor, moons or sine_regression)");
}

// xor: corner i%4 of the unit square plus Gaussian noise, label = parity.
// moons: two interleaving half circles (outer label 0, inner label 1) plus Gaussian noise.
// sine_regression: x ~ U[-2, 2], y = sin(3x) + noise * N(0,1).
[[nodiscard]] inline Dataset synth(SynthKind kind, std::size_t n, double noise, Rng& rng)
{
    if (n < 4) throw std::invalid_argument("synth: need at least 4 samples");
    Dataset ds;
    ds.x.resize(static_cast<Eigen::Index>(n), kind == SynthKind::sine_regression ? 1 : 2);
    ds.y.resize(static_cast<Eigen::Index>(n));
    switch (kind) {
    case SynthKind::xor_clusters: {
        ds.feature_names = {"x1", "x2"};
        for (std::size_t i = 0; i < n; ++i) {
            const int a = static_cast<int>((i % 4) / 2);
            const int b = static_cast<int>(i % 2);
            const auto r = static_cast<Eigen::Index>(i);
            ds.x(r, 0) = a + noise * rng.normal();
            ds.x(r, 1) = b + noise * rng.normal();
            ds.y(r) = a ^ b;
        }
        break;
    }
    case SynthKind::moons: {
        ds.feature_names = {"x1", "x2"};
        const std::size_t n_outer = n / 2;
        const std::size_t n_inner = n - n_outer;
        for (std::size_t i = 0; i < n; ++i) {
            const bool outer = i < n_outer;
            const std::size_t j = outer ? i : i - n_outer;
            const std::size_t m = outer ? n_outer : n_inner;
            const double t = m > 1 ? std::numbers::pi * static_cast<double>(j) / static_cast<double>(m - 1) : 0.0;
            const auto r = static_cast<Eigen::Index>(i);
            ds.x(r, 0) = (outer ? std::cos(t) : 1.0 - std::cos(t)) + noise * rng.normal();
            ds.x(r, 1) = (outer ? std::sin(t) : 0.5 - std::sin(t)) + noise * rng.normal();
            ds.y(r) = outer ? 0.0 : 1.0;
        }
        break;
    }
    case SynthKind::sine_regression: {
        ds.feature_names = {"x"};
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double x = rng.uniform(-2.0, 2.0);
            ds.x(r, 0) = x;
            ds.y(r) = std::sin(3.0 * x) + noise * rng.normal();
        }
        ds.kind = TargetKind::regression;
        ds.n_classes = 1;
        return ds;
    }
    }
    ds.kind = TargetKind::binary;
    ds.n_classes = 2;
    ds.class_labels = {"0", "1"};
    return ds;
}

} // namespace evoact
