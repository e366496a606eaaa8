#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cluslasso/clustering.hpp"
#include "cluslasso/linalg.hpp"

namespace cluslasso {

struct CsvError : std::runtime_error {
    CsvError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                             ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

/// Shortest round-trippable decimal representation.
inline std::string fmt_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> header;  // empty when the file had no header row
    Eigen::MatrixXd values;
};

/// Reads a comma-separated numeric table. A single leading header row is
/// detected by its non-numeric fields. Malformed cells and ragged rows raise
/// CsvError with one-based line/column positions.
inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    CsvTable table;
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (!detail::parse_double(fields[c], row[c])) {
                numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!numeric) {
            if (!saw_data && table.header.empty()) {
                table.header = fields;
                width = fields.size();
                continue;
            }
            throw CsvError(line_no, static_cast<int>(bad_col) + 1,
                           "expected a number, got '" + fields[bad_col] + "'");
        }
        if (!saw_data && width == 0) width = fields.size();
        if (fields.size() != width)
            throw CsvError(line_no, static_cast<int>(fields.size()),
                           "expected " + std::to_string(width) + " fields, got " +
                               std::to_string(fields.size()));
        rows.push_back(std::move(row));
        saw_data = true;
    }
    if (rows.empty()) throw CsvError(line_no, 1, "no data rows");
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

inline DesignMatrix read_design_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    return DesignMatrix::make(std::move(table.values), std::move(table.header));
}

inline Eigen::VectorXd read_response_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.values.cols() != 1) throw CsvError(1, 2, "response must be a single column");
    return table.values.col(0);
}

/// One partition group per line, zero-based comma-separated indices.
inline std::string partition_to_text(const Partition& part) {
    std::string out;
    for (const auto& g : part.groups) {
        for (std::size_t i = 0; i < g.indices.size(); ++i) {
            if (i > 0) out += ',';
            out += std::to_string(g.indices[static_cast<std::size_t>(i)]);
        }
        out += '\n';
    }
    return out;
}

inline Partition partition_from_text(const std::string& text, int p) {
    std::vector<std::vector<int>> raw;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<int> group;
        for (const std::string& field : detail::split_csv_line(line)) {
            double v = 0.0;
            if (!detail::parse_double(field, v) || v != std::floor(v))
                throw CsvError(line_no, static_cast<int>(group.size()) + 1,
                               "expected an integer index, got '" + field + "'");
            group.push_back(static_cast<int>(v));
        }
        raw.push_back(std::move(group));
    }
    return Partition::of(std::move(raw), p);
}

inline nlohmann::json partition_to_json(const Partition& part) {
    nlohmann::json doc;
    doc["schema"] = "cluslasso.partition/1";
    doc["groups"] = nlohmann::json::array();
    for (const auto& g : part.groups) doc["groups"].push_back(g.indices);
    return doc;
}

inline Partition partition_from_json(const nlohmann::json& doc, int p) {
    std::vector<std::vector<int>> raw;
    for (const auto& g : doc.at("groups")) raw.push_back(g.get<std::vector<int>>());
    return Partition::of(std::move(raw), p);
}

/// Loads either serialized form: JSON when the content starts with '{',
/// otherwise the one-group-per-line text form.
inline Partition load_partition(const std::filesystem::path& path, int p) {
    const std::string content = read_file(path);
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '{')
        return partition_from_json(nlohmann::json::parse(content), p);
    return partition_from_text(content, p);
}

/// Human-readable nested key-value document with a fixed schema line.
class DocWriter {
  public:
    explicit DocWriter(const std::string& schema) { field("schema", schema); }

    void field(const std::string& key, const std::string& value) {
        indent();
        out_ += key + ": " + value + "\n";
    }

    void field(const std::string& key, const char* value) { field(key, std::string(value)); }
    void field(const std::string& key, double value) { field(key, fmt_double(value)); }
    void field(const std::string& key, int value) { field(key, std::to_string(value)); }
    void field(const std::string& key, std::size_t value) { field(key, std::to_string(value)); }
    void field(const std::string& key, bool value) { field(key, std::string(value ? "true" : "false")); }

    template <class T>
    void field_list(const std::string& key, const std::vector<T>& values) {
        std::string joined;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) joined += ",";
            if constexpr (std::is_same_v<T, double>) {
                joined += fmt_double(values[i]);
            } else {
                joined += std::to_string(values[i]);
            }
        }
        field(key, joined);
    }

    void begin(const std::string& key) {
        indent();
        out_ += key + ":\n";
        ++depth_;
    }

    void end() { --depth_; }

    const std::string& str() const { return out_; }

  private:
    void indent() { out_.append(static_cast<std::size_t>(2 * depth_), ' '); }

    std::string out_;
    int depth_ = 0;
};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG renderer for curve data: axes, tick labels, one polyline per
/// series, legend. The CSV files remain the canonical artifact.
inline std::string svg_plot(const std::vector<PlotSeries>& series, const std::string& x_label,
                            const std::string& y_label) {
    static const char* kColors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b"};
    const double width = 720, height = 480, margin = 64;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    const auto sx = [&](double v) {
        return margin + (v - x_min) / (x_max - x_min) * (width - 2 * margin);
    };
    const auto sy = [&](double v) {
        return height - margin - (v - y_min) / (y_max - y_min) * (height - 2 * margin);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(width) +
           "\" height=\"" + fmt_double(height) + "\" viewBox=\"0 0 " + fmt_double(width) + " " +
           fmt_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string axis_style = "stroke=\"black\" stroke-width=\"1\"";
    svg += "<line x1=\"" + fmt_double(margin) + "\" y1=\"" + fmt_double(height - margin) +
           "\" x2=\"" + fmt_double(width - margin) + "\" y2=\"" + fmt_double(height - margin) +
           "\" " + axis_style + "/>\n";
    svg += "<line x1=\"" + fmt_double(margin) + "\" y1=\"" + fmt_double(margin) + "\" x2=\"" +
           fmt_double(margin) + "\" y2=\"" + fmt_double(height - margin) + "\" " + axis_style +
           "/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = x_min + (x_max - x_min) * t / 4.0;
        const double fy = y_min + (y_max - y_min) * t / 4.0;
        char label[32];
        std::snprintf(label, sizeof(label), "%.4g", fx);
        svg += "<text x=\"" + fmt_double(sx(fx)) + "\" y=\"" + fmt_double(height - margin + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + label + "</text>\n";
        std::snprintf(label, sizeof(label), "%.4g", fy);
        svg += "<text x=\"" + fmt_double(margin - 8) + "\" y=\"" + fmt_double(sy(fy) + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + label + "</text>\n";
    }
    svg += "<text x=\"" + fmt_double(width / 2) + "\" y=\"" + fmt_double(height - 16) +
           "\" font-size=\"13\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt_double(height / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           fmt_double(height / 2) + ")\">" + y_label + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 6];
        std::string points;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i > 0) points += " ";
            points += fmt_double(sx(series[s].x[i])) + "," + fmt_double(sy(series[s].y[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        const double ly = margin + 16 * static_cast<double>(s);
        svg += "<line x1=\"" + fmt_double(width - margin - 110) + "\" y1=\"" + fmt_double(ly) +
               "\" x2=\"" + fmt_double(width - margin - 86) + "\" y2=\"" + fmt_double(ly) +
               "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + fmt_double(width - margin - 80) + "\" y=\"" + fmt_double(ly + 4) +
               "\" font-size=\"12\">" + series[s].label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace cluslasso
