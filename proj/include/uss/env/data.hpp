#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/errors.hpp"
#include "uss/io/format.hpp"
#include "uss/random.hpp"

namespace uss {

// Label rule of the synthetic cascade problem: 0 when x1 + x1*x2 + x3^2 < 0.
inline int synthetic_label(std::span<const double> x) {
    return x[0] + x[0] * x[1] + x[2] * x[2] < 0.0 ? 0 : 1;
}

// n contexts with coordinates uniform on the open interval (-1, 1).
inline Dataset generate_synthetic(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw PreconditionError("generate_synthetic: n must be >= 1");
    Rng rng(seed);
    Dataset out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        LabeledContext ctx;
        ctx.x.resize(3);
        for (auto& v : ctx.x) {
            double u;
            do {
                u = uniform01(rng);
            } while (u == 0.0);
            v = 2.0 * u - 1.0;
        }
        ctx.y = synthetic_label(ctx.x);
        out.push_back(std::move(ctx));
    }
    return out;
}

inline const std::vector<std::string>& synthetic_feature_names() {
    static const std::vector<std::string> names{"x1", "x2", "x3"};
    return names;
}

struct DatasetSchema {
    std::vector<std::string> features;
    std::string label;
};

struct LoadedDataset {
    Dataset samples;
    std::vector<std::string> feature_names;
    std::vector<ColumnScaling> scaling;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cell += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    for (auto& s : cells) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    }
    return cells;
}

}  // namespace detail

// Reads a header-bearing CSV. Feature columns are rescaled to [-1, 1] with
// their min/max, unless `fixed` scaling is given (then values are mapped with it
// and clamped). Rows are 1-based data rows (the header is row 0).
inline LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema,
                                  const std::optional<std::vector<ColumnScaling>>& fixed = std::nullopt) {
    if (schema.features.empty()) throw ConfigError("load_dataset: schema names no feature columns");
    std::ifstream in(path);
    if (!in) throw IoError("load_dataset: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw DataError("load_dataset: '" + path + "' is empty (no header row)");
    }
    const auto header = detail::split_csv_line(line);
    auto find_column = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw DataError("load_dataset: column '" + name + "' not found in header of '" + path + "'");
    };
    std::vector<std::size_t> feature_cols;
    for (const auto& f : schema.features) feature_cols.push_back(find_column(f));
    const std::size_t label_col = find_column(schema.label);

    const std::size_t d = feature_cols.size();
    std::vector<std::vector<double>> raw;
    std::vector<int> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("load_dataset: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
        }
        std::vector<double> x(d);
        for (std::size_t k = 0; k < d; ++k) {
            const auto& cell = cells[feature_cols[k]];
            if (!parse_double(cell, x[k])) {
                throw DataError("load_dataset: row " + std::to_string(row) + ", column '" + schema.features[k] +
                                "': " + (cell.empty() ? std::string("missing value") : "non-numeric value '" + cell + "'"));
            }
        }
        double yv = 0.0;
        const auto& lcell = cells[label_col];
        if (!parse_double(lcell, yv) || (yv != 0.0 && yv != 1.0)) {
            throw DataError("load_dataset: row " + std::to_string(row) + ", column '" + schema.label +
                            "': label must be 0 or 1 (got '" + lcell + "')");
        }
        raw.push_back(std::move(x));
        labels.push_back(static_cast<int>(yv));
    }
    if (raw.empty()) throw DataError("load_dataset: '" + path + "' has a header but no data rows");

    LoadedDataset out;
    out.feature_names = schema.features;
    if (fixed) {
        if (fixed->size() != d) throw ConfigError("load_dataset: fixed scaling does not match the feature count");
        out.scaling = *fixed;
    } else {
        out.scaling.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            double lo = raw[0][k];
            double hi = raw[0][k];
            for (const auto& r : raw) {
                lo = std::min(lo, r[k]);
                hi = std::max(hi, r[k]);
            }
            out.scaling[k] = {lo, hi};
        }
    }
    out.samples.reserve(raw.size());
    for (std::size_t s = 0; s < raw.size(); ++s) {
        LabeledContext ctx;
        ctx.y = labels[s];
        ctx.x.resize(d);
        for (std::size_t k = 0; k < d; ++k) ctx.x[k] = std::clamp(out.scaling[k].apply(raw[s][k]), -1.0, 1.0);
        out.samples.push_back(std::move(ctx));
    }
    return out;
}

inline void write_dataset(const std::string& path, const Dataset& data, const std::vector<std::string>& names,
                          const std::string& label = "label") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    std::string text;
    for (const auto& n : names) text += n + ",";
    text += label + "\n";
    for (const auto& ctx : data) {
        if (ctx.x.size() != names.size()) throw PreconditionError("write_dataset: context width differs from header");
        for (double v : ctx.x) {
            append_double(text, v);
            text += ',';
        }
        text += ctx.y == 1 ? "1\n" : "0\n";
    }
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace uss
