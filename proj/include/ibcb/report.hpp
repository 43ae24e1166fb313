#pragma once

// Aggregation of metrics CSV files into mean ± std tables.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibcb {

/// A parsed CSV file: header names and rows of raw cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index; throws if the column is missing.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Population mean and standard deviation as "m.mmm±s.sss".
std::string format_mean_std(std::span<const double> values);

struct AggregateRow {
    /// Group key columns in the order of kGroupColumns.
    std::vector<std::string> key;
    std::size_t n = 0;
    /// metric name → formatted mean±std, absent if no row had a value.
    std::map<std::string, std::string> cells;
};

inline const std::vector<std::string> kGroupColumns = {"algorithm", "alpha",   "expert_mode", "noise_std",
                                                       "dup",       "ce_rate", "ood"};
inline const std::vector<std::string> kReportMetrics = {"ol_fitness", "bt_fitness", "bt_avg_reward", "train_fitness",
                                                        "train_time_seconds"};

/// Groups metrics rows (and optional timing rows) by kGroupColumns in order of
/// first appearance.
std::vector<AggregateRow> aggregate(const CsvTable& metrics, const std::optional<CsvTable>& timings = std::nullopt);

void write_report_markdown(const std::vector<AggregateRow>& rows, std::ostream& out);
/// Same table without wall-clock columns.
void write_report_csv(const std::vector<AggregateRow>& rows, std::ostream& out);

/// Reads every metrics.csv (and sibling timings.csv) below `dir` and writes
/// report.md and report.csv into it. Throws when no metrics rows are found.
std::vector<AggregateRow> cmd_report(const std::filesystem::path& dir);

}  // namespace ibcb
