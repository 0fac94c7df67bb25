#include "pico/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>


#include "pico/core/error.hpp"

namespace pico::eval {
namespace {

constexpr const char* kCsvHeader =
    "schema_version,method,lambda,mean_bits,bits_per_dim,agreement,std_error,images,repeats,seed,model_checksum,"
    "policy_checksum";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

}  // namespace

Comparison compare_methods(const std::vector<SweepResult>& sweeps) {
    if (sweeps.empty()) throw EvaluationError("nothing to compare");
    Comparison out;
    const auto& grid = sweeps.front().points;
    for (const auto& s : sweeps) {
        if (s.points.size() != grid.size()) throw EvaluationError("sweeps use different lambda grids");
        for (std::size_t j = 0; j < grid.size(); ++j)
            if (std::abs(s.points[j].lambda - grid[j].lambda) > 1e-12)
                throw EvaluationError("sweeps use different lambda grids");
        out.methods.push_back(s.method);
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        ComparisonRow row;
        row.lambda = grid[j].lambda;
        for (const auto& s : sweeps) {
            row.agreement.push_back(s.points[j].agreement);
            row.std_error.push_back(s.points[j].std_error);
            row.bits_per_dim.push_back(s.points[j].bits_per_dim);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string Comparison::table() const {
    std::ostringstream out;
    out << std::left << std::setw(8) << "lambda";
    for (const auto& m : methods) out << std::setw(28) << (m + " agree (bpd)");
    out << '\n';
    for (const auto& row : rows) {
        out << std::setw(8) << fmt(row.lambda, 2);
        for (std::size_t k = 0; k < methods.size(); ++k)
            out << std::setw(28)
                << (fmt(row.agreement[k], 3) + " +- " + fmt(row.std_error[k], 3) + " (" + fmt(row.bits_per_dim[k], 4) + ")");
        out << '\n';
    }
    return out.str();
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<SweepResult>& sweeps) {
    std::ostringstream out;
    out << std::setprecision(17) << kCsvHeader << '\n';
    for (const auto& s : sweeps) {
        if (s.method.find(',') != std::string::npos) throw InputError("method names may not contain commas");
        for (const auto& p : s.points)
            out << kReportSchemaVersion << ',' << s.method << ',' << p.lambda << ',' << p.mean_bits << ','
                << p.bits_per_dim << ',' << p.agreement << ',' << p.std_error << ',' << p.images << ',' << p.repeats
                << ',' << s.seed << ',' << s.model_checksum << ',' << s.policy_checksum << '\n';
    }
    write_text(path, out.str());
}

std::vector<SweepResult> read_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw FormatError(path.string() + ": unexpected header");
    std::vector<SweepResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 12) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 12 columns");
        try {
            if (std::stoi(cells[0]) != kReportSchemaVersion) throw FormatError("unsupported report schema");
            if (out.empty() || out.back().method != cells[1]) {
                out.emplace_back();
                out.back().method = cells[1];
                out.back().seed = std::stoull(cells[9]);
                out.back().model_checksum = cells[10];
                out.back().policy_checksum = cells[11];
            }
            SweepPoint p;
            p.lambda = std::stod(cells[2]);
            p.mean_bits = std::stod(cells[3]);
            p.bits_per_dim = std::stod(cells[4]);
            p.agreement = std::stod(cells[5]);
            p.std_error = std::stod(cells[6]);
            p.images = std::stoull(cells[7]);
            p.repeats = std::stoi(cells[8]);
            out.back().points.push_back(p);
        } catch (const std::logic_error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string render_curves_svg(const std::vector<SweepResult>& sweeps) {
    constexpr double W = 640, H = 420, left = 70, right = 170, top = 30, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    double x_max = 0.0;
    for (const auto& s : sweeps)
        for (const auto& p : s.points) x_max = std::max(x_max, p.bits_per_dim);
    if (x_max <= 0.0) x_max = 1.0;
    x_max *= 1.05;
    auto sx = [&](double v) { return left + pw * v / x_max; };
    auto sy = [&](double v) { return top + ph * (1.0 - v); };
    static const char* colors[] = {"#1b6ca8", "#d1495b", "#edae49", "#00798c", "#66a182", "#8d6a9f"};

    std::ostringstream svg;
    svg << std::setprecision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        svg << "<line x1=\"" << left - 4 << "\" y1=\"" << sy(v) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(v)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\">" << fmt(v, 1)
            << "</text>\n";
        const double xv = x_max * i / 5.0;
        svg << "<line x1=\"" << sx(xv) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(xv) << "\" y2=\"" << top + ph + 4
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(xv, 3)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">bits per dimension</text>\n";
    svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">action agreement</text>\n";
    for (std::size_t k = 0; k < sweeps.size(); ++k) {
        const char* color = colors[k % 6];
        std::vector<SweepPoint> pts = sweeps[k].points;
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.bits_per_dim < b.bits_per_dim; });
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : pts) svg << sx(p.bits_per_dim) << ',' << sy(p.agreement) << ' ';
        svg << "\"/>\n";
        for (const auto& p : pts) {
            svg << "<line x1=\"" << sx(p.bits_per_dim) << "\" y1=\"" << sy(std::min(1.0, p.agreement + p.std_error))
                << "\" x2=\"" << sx(p.bits_per_dim) << "\" y2=\"" << sy(std::max(0.0, p.agreement - p.std_error))
                << "\" stroke=\"" << color << "\"/>\n";
            svg << "<circle cx=\"" << sx(p.bits_per_dim) << "\" cy=\"" << sy(p.agreement) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        }
        const double ly = top + 10 + 20.0 * double(k);
        svg << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << sweeps[k].method << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

ReportFiles emit_report(const std::vector<SweepResult>& sweeps, const std::filesystem::path& out_dir) {
    const auto comparison = compare_methods(sweeps);
    ReportFiles files{out_dir / "curves.csv", out_dir / "curves.svg", out_dir / "comparison.txt"};
    write_curves_csv(files.csv, sweeps);
    write_text(files.svg, render_curves_svg(sweeps));
    write_text(files.table, comparison.table());
    return files;
}

}  // namespace pico::eval
