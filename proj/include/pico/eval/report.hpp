#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pico/eval/sweep.hpp"

namespace pico::eval {

inline constexpr int kReportSchemaVersion = 1;

struct ComparisonRow {
    double lambda = 0.0;
    std::vector<double> agreement;  // per method, in Comparison::methods order
    std::vector<double> std_error;
    std::vector<double> bits_per_dim;
};

struct Comparison {
    std::vector<std::string> methods;
    std::vector<ComparisonRow> rows;

    std::string table() const;
};

// Lines up sweeps that share the same lambda grid; throws EvaluationError
// otherwise.
Comparison compare_methods(const std::vector<SweepResult>& sweeps);

void write_curves_csv(const std::filesystem::path& path, const std::vector<SweepResult>& sweeps);
std::vector<SweepResult> read_curves_csv(const std::filesystem::path& path);
// Agreement against bits per dimension, one polyline per method.
std::string render_curves_svg(const std::vector<SweepResult>& sweeps);

struct ReportFiles {
    std::filesystem::path csv;
    std::filesystem::path svg;
    std::filesystem::path table;
};

// Writes curves.csv, curves.svg and comparison.txt under out_dir.
ReportFiles emit_report(const std::vector<SweepResult>& sweeps, const std::filesystem::path& out_dir);

}  // namespace pico::eval
