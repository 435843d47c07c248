#include "fairfis/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fairfis {
namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delimiter) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) return false;
    return std::isfinite(out);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw std::runtime_error("empty file: " + path);
    return lines;
}

int resolve_column(const std::string& name, const std::vector<std::string>& header, bool has_header,
                   int n_cols) {
    if (has_header) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("unknown column '" + name + "'");
        return static_cast<int>(it - header.begin());
    }
    int idx = -1;
    auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
    if (ec != std::errc() || ptr != name.data() + name.size() || idx < 0 || idx >= n_cols)
        throw std::runtime_error("unknown column '" + name + "' (expected index 0.." +
                                 std::to_string(n_cols - 1) + ")");
    return idx;
}

}  // namespace

TargetVector make_target(std::vector<double> values, TaskKind task) {
    TargetVector t;
    t.values = std::move(values);
    if (task == TaskKind::regression) {
        t.kind = TargetVector::Kind::continuous;
        t.n_classes = 0;
        return t;
    }
    double max_label = 0;
    for (size_t i = 0; i < t.values.size(); ++i) {
        double v = t.values[i];
        if (v != std::floor(v) || v < 0 || v > 1e9)
            throw std::runtime_error("classification target is not a class label at row " +
                                     std::to_string(i) + " (value " + format_double(v) + ")");
        max_label = std::max(max_label, v);
    }
    t.n_classes = static_cast<int>(max_label) + 1;
    if (t.n_classes < 2)
        throw std::runtime_error("classification target has a single class");
    t.kind = t.n_classes == 2 ? TargetVector::Kind::binary : TargetVector::Kind::multiclass;
    return t;
}

Dataset load_dataset(const std::string& path, const ColumnSchema& schema) {
    auto lines = read_lines(path);
    auto first = split_line(lines[0], schema.delimiter);
    const int n_cols = static_cast<int>(first.size());

    std::vector<std::string> header;
    size_t data_start = 0;
    if (schema.has_header) {
        header = first;
        data_start = 1;
        if (lines.size() < 2) throw std::runtime_error("file has a header but no data rows: " + path);
    }

    int target_col = resolve_column(schema.target, header, schema.has_header, n_cols);
    int protected_col = resolve_column(schema.protected_col, header, schema.has_header, n_cols);
    if (target_col == protected_col)
        throw std::runtime_error("target and protected columns are the same column");
    std::set<int> skip = {target_col, protected_col};
    for (const auto& name : schema.ignored) {
        int c = resolve_column(name, header, schema.has_header, n_cols);
        if (c == target_col || c == protected_col)
            throw std::runtime_error("column '" + name + "' is both ignored and target/protected");
        skip.insert(c);
    }

    Dataset d;
    for (int c = 0; c < n_cols; ++c) {
        if (skip.count(c)) continue;
        d.feature_names.push_back(schema.has_header ? header[c] : "c" + std::to_string(c));
    }
    d.p = static_cast<int>(d.feature_names.size());
    if (d.p < 1) throw std::runtime_error("no feature columns left after applying the schema");

    std::vector<std::string> protected_raw;
    std::vector<double> target_raw;
    for (size_t li = data_start; li < lines.size(); ++li) {
        if (trim(lines[li]).empty())
            throw std::runtime_error("blank row " + std::to_string(li - data_start) + " in " + path);
        auto cells = split_line(lines[li], schema.delimiter);
        if (static_cast<int>(cells.size()) != n_cols)
            throw std::runtime_error("row " + std::to_string(li - data_start) + " has " +
                                     std::to_string(cells.size()) + " columns, expected " +
                                     std::to_string(n_cols));
        for (int c = 0; c < n_cols; ++c) {
            if (c == protected_col) {
                protected_raw.push_back(cells[c]);
            } else if (c == target_col) {
                double v;
                if (!parse_number(cells[c], v))
                    throw std::runtime_error("non-numeric target value '" + cells[c] + "' at row " +
                                             std::to_string(li - data_start));
                target_raw.push_back(v);
            } else if (!skip.count(c)) {
                double v;
                if (!parse_number(cells[c], v))
                    throw std::runtime_error("non-numeric feature value '" + cells[c] + "' at row " +
                                             std::to_string(li - data_start) + ", column " +
                                             (schema.has_header ? header[c] : std::to_string(c)));
                d.x.push_back(v);
            }
        }
    }
    d.n = static_cast<std::int64_t>(target_raw.size());
    if (d.n < 2) throw std::runtime_error("dataset needs at least 2 rows, got " + std::to_string(d.n));

    // Protected attribute: at most two distinct raw values; the declared
    // positive value maps to 1, otherwise the cells must already be 0/1.
    std::set<std::string> distinct(protected_raw.begin(), protected_raw.end());
    if (distinct.size() > 2) throw std::runtime_error("protected attribute not binary (" +
                                                      std::to_string(distinct.size()) +
                                                      " distinct values)");
    d.z.reserve(d.n);
    for (const auto& cell : protected_raw) {
        if (schema.protected_positive) {
            d.z.push_back(cell == *schema.protected_positive ? 1 : 0);
        } else {
            double v;
            if (!parse_number(cell, v) || (v != 0.0 && v != 1.0))
                throw std::runtime_error("protected attribute not binary (value '" + cell +
                                         "'); use --protected-positive to map a raw value");
            d.z.push_back(v == 1.0 ? 1 : 0);
        }
    }

    d.y = make_target(std::move(target_raw), schema.task);

    auto report = validate_dataset(d, schema.task);
    if (!report.ok()) throw std::runtime_error("invalid dataset: " + report.errors.front().message);
    return d;
}

void write_dataset(const std::string& path, const Dataset& d, char delimiter) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (int j = 0; j < d.p; ++j) out << d.feature_names[j] << delimiter;
    out << "z" << delimiter << "y\n";
    const bool labels = d.y.kind != TargetVector::Kind::continuous;
    for (std::int64_t i = 0; i < d.n; ++i) {
        for (int j = 0; j < d.p; ++j) out << format_double(d.at(i, j)) << delimiter;
        out << d.z[i] << delimiter;
        if (labels)
            out << d.y.label(i);
        else
            out << format_double(d.y.values[i]);
        out << "\n";
    }
}

ValidationReport validate_dataset(const Dataset& d, TaskKind task) {
    ValidationReport report;
    auto error = [&](std::int64_t row, int col, std::string msg) {
        report.errors.push_back({false, row, col, std::move(msg)});
    };

    if (d.n < 2) error(-1, -1, "dataset has fewer than 2 rows");
    if (d.p < 1) error(-1, -1, "dataset has no features");
    if (static_cast<std::int64_t>(d.x.size()) != d.n * d.p)
        error(-1, -1, "feature matrix size does not match n * p");
    if (static_cast<std::int64_t>(d.y.values.size()) != d.n)
        error(-1, -1, "target length does not match n");
    if (static_cast<std::int64_t>(d.z.size()) != d.n)
        error(-1, -1, "protected attribute length does not match n");
    if (static_cast<int>(d.feature_names.size()) != d.p)
        error(-1, -1, "feature name count does not match p");
    if (!report.ok()) return report;

    for (std::int64_t i = 0; i < d.n; ++i) {
        for (int j = 0; j < d.p; ++j) {
            if (!std::isfinite(d.at(i, j)))
                error(i, j, "non-finite feature value at row " + std::to_string(i) + ", column " +
                                d.feature_names[j]);
        }
        if (d.z[i] != 0 && d.z[i] != 1)
            error(i, -1, "protected attribute not in {0,1} at row " + std::to_string(i));
    }

    if (task == TaskKind::classification) {
        if (d.y.kind == TargetVector::Kind::continuous) {
            error(-1, -1, "classification task but continuous target");
        } else {
            if (d.y.n_classes < 2) error(-1, -1, "classification target has fewer than 2 classes");
            for (std::int64_t i = 0; i < d.n; ++i) {
                double v = d.y.values[i];
                if (v != std::floor(v) || v < 0 || v >= d.y.n_classes)
                    error(i, -1, "target out of class range at row " + std::to_string(i));
            }
        }
    } else {
        for (std::int64_t i = 0; i < d.n; ++i) {
            if (!std::isfinite(d.y.values[i]))
                error(i, -1, "non-finite target at row " + std::to_string(i));
        }
    }

    bool has0 = false, has1 = false;
    for (std::int64_t i = 0; i < d.n; ++i) (d.z[i] == 1 ? has1 : has0) = true;
    if (!(has0 && has1))
        report.warnings.push_back(
            {true, -1, -1, "degenerate protected attribute: single group present (bias metrics will be 0)"});

    return report;
}

std::vector<double> load_predictions(const std::string& path) {
    auto lines = read_lines(path);
    std::vector<double> out;
    out.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        double v;
        std::string cell = trim(lines[i]);
        if (!parse_number(cell, v))
            throw std::runtime_error("non-numeric prediction '" + cell + "' at row " + std::to_string(i));
        out.push_back(v);
    }
    return out;
}

}  // namespace fairfis
