#include "ibcb/report.hpp"

#include "ibcb/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ibcb {

namespace fs = std::filesystem;

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string key_string(const std::vector<std::string>& key) {
    std::string out;
    for (const auto& k : key) out += k + '\x1f';
    return out;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError(fmt::format("csv: {} cells, header has {}", cells.size(), t.header.size()), line_no);
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return read_csv(in);
}

std::string format_mean_std(std::span<const double> values) {
    if (values.empty()) throw Error("format_mean_std: no values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return fmt::format("{:.3f}±{:.3f}", mean, std::sqrt(var));
}

std::vector<AggregateRow> aggregate(const CsvTable& metrics, const std::optional<CsvTable>& timings) {
    struct Group {
        std::vector<std::string> key;
        std::size_t n = 0;
        std::map<std::string, std::vector<double>> values;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> index;

    const auto collect = [&](const CsvTable& table, const std::vector<std::string>& metric_names, bool count) {
        std::vector<std::size_t> key_cols;
        for (const auto& c : kGroupColumns) key_cols.push_back(table.column(c));
        std::vector<std::pair<std::string, std::size_t>> metric_cols;
        for (const auto& m : metric_names) {
            if (std::find(table.header.begin(), table.header.end(), m) != table.header.end()) {
                metric_cols.emplace_back(m, table.column(m));
            }
        }
        for (const auto& row : table.rows) {
            std::vector<std::string> key;
            for (std::size_t c : key_cols) key.push_back(row[c]);
            const std::string ks = key_string(key);
            auto it = index.find(ks);
            if (it == index.end()) {
                it = index.emplace(ks, groups.size()).first;
                groups.push_back(Group{key, 0, {}});
            }
            Group& g = groups[it->second];
            if (count) ++g.n;
            for (const auto& [name, col] : metric_cols) {
                if (row[col].empty()) continue;
                try {
                    g.values[name].push_back(std::stod(row[col]));
                } catch (const std::exception&) {
                    throw Error("csv: column " + name + " holds non-numeric '" + row[col] + "'");
                }
            }
        }
    };
    collect(metrics, kReportMetrics, true);
    if (timings) collect(*timings, {"train_time_seconds"}, false);

    std::vector<AggregateRow> out;
    for (const Group& g : groups) {
        AggregateRow r{g.key, g.n, {}};
        for (const auto& [name, vals] : g.values) r.cells[name] = format_mean_std(vals);
        out.push_back(std::move(r));
    }
    return out;
}

void write_report_markdown(const std::vector<AggregateRow>& rows, std::ostream& out) {
    std::vector<std::string> cols = kGroupColumns;
    cols.emplace_back("n");
    cols.insert(cols.end(), kReportMetrics.begin(), kReportMetrics.end());
    out << '|';
    for (const auto& c : cols) out << ' ' << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& r : rows) {
        out << '|';
        for (const auto& k : r.key) out << ' ' << k << " |";
        out << ' ' << r.n << " |";
        for (const auto& m : kReportMetrics) {
            const auto it = r.cells.find(m);
            out << ' ' << (it == r.cells.end() ? "-" : it->second) << " |";
        }
        out << '\n';
    }
}

void write_report_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
    // Wall-clock columns stay in the markdown only, so this file is reproducible.
    std::vector<std::string> metrics;
    for (const auto& m : kReportMetrics) {
        if (m != "train_time_seconds") metrics.push_back(m);
    }
    for (const auto& c : kGroupColumns) out << c << ',';
    out << 'n';
    for (const auto& m : metrics) out << ',' << m;
    out << '\n';
    for (const auto& r : rows) {
        for (const auto& k : r.key) out << k << ',';
        out << r.n;
        for (const auto& m : metrics) {
            const auto it = r.cells.find(m);
            out << ',' << (it == r.cells.end() ? "" : it->second);
        }
        out << '\n';
    }
}

std::vector<AggregateRow> cmd_report(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("report: '" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    CsvTable metrics;
    std::optional<CsvTable> timings;
    for (const auto& f : files) {
        CsvTable t = read_csv(f);
        if (metrics.header.empty()) metrics.header = t.header;
        if (t.header != metrics.header) throw Error("report: '" + f.string() + "' has a different column layout");
        metrics.rows.insert(metrics.rows.end(), t.rows.begin(), t.rows.end());
        const fs::path tf = f.parent_path() / "timings.csv";
        if (fs::exists(tf)) {
            CsvTable tt = read_csv(tf);
            if (!timings) {
                timings = std::move(tt);
            } else {
                timings->rows.insert(timings->rows.end(), tt.rows.begin(), tt.rows.end());
            }
        }
    }
    if (metrics.rows.empty()) throw Error("report: no metrics rows under '" + dir.string() + "'");
    const std::vector<AggregateRow> rows = aggregate(metrics, timings);
    std::ofstream md(dir / "report.md", std::ios::binary);
    write_report_markdown(rows, md);
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    write_report_csv(rows, csv);
    if (!md || !csv) throw Error("report: failed writing into '" + dir.string() + "'");
    return rows;
}

}  // namespace ibcb
