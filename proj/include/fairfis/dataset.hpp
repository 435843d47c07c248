#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairfis/util.hpp"

namespace fairfis {

enum class TaskKind { classification, regression };

struct TargetVector {
    enum class Kind { binary, multiclass, continuous };

    Kind kind = Kind::continuous;
    int n_classes = 0;  // K for classification, 0 for continuous
    std::vector<double> values;

    int label(std::int64_t i) const { return static_cast<int>(values[i]); }
};

// Validated tabular dataset: features x, target y, binary protected attribute z.
struct Dataset {
    std::vector<double> x;  // row-major n * p
    TargetVector y;
    std::vector<int> z;
    std::vector<std::string> feature_names;
    std::int64_t n = 0;
    int p = 0;

    double at(std::int64_t i, int j) const { return x[i * p + j]; }
    MatrixView features() const { return MatrixView{x.data(), n, p}; }
};

// Column roles for delimited ingestion. Columns are addressed by header name,
// or by 0-based index when the file has no header row.
struct ColumnSchema {
    std::string target;
    std::string protected_col;
    std::optional<std::string> protected_positive;  // raw value mapped to z = 1
    std::vector<std::string> ignored;
    char delimiter = ',';
    bool has_header = true;
    TaskKind task = TaskKind::classification;
};

struct Violation {
    bool warning = false;
    std::int64_t row = -1;  // -1 when not tied to a row
    int column = -1;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> errors;
    std::vector<Violation> warnings;

    bool ok() const { return errors.empty(); }
};

Dataset load_dataset(const std::string& path, const ColumnSchema& schema);
void write_dataset(const std::string& path, const Dataset& d, char delimiter = ',');
ValidationReport validate_dataset(const Dataset& d, TaskKind task);

// Classifies a raw target column: binary/multiclass labels or continuous.
TargetVector make_target(std::vector<double> values, TaskKind task);

// Single-column predictions file for surrogate workflows, one value per row.
std::vector<double> load_predictions(const std::string& path);

}  // namespace fairfis
