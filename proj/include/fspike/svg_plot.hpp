#pragma once

// Minimal standalone SVG line charts from CSV columns.

#include <filesystem>
#include <string>
#include <vector>

namespace fspike {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns; // NaN for empty or non-numeric cells

    std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv_table(const std::filesystem::path& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 720;
    int height = 440;
};

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts);

// Escapes &, <, >, " and ' for XML text and attributes.
std::string xml_escape(const std::string& s);

} // namespace fspike
