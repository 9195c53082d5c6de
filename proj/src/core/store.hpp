#pragma once

#include "metrics.hpp"
#include "run_record.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bose {

/// Appends one record as a JSONL line. The write happens under an exclusive
/// file lock after a duplicate-run_id scan, so concurrent appenders (threads
/// or processes) cannot interleave or double-insert.
void append_run(const std::string& path, const RunRecord& record);

/// Parses a full store file, validating each record (including that the
/// stored accuracy matches its payload).
std::vector<RunRecord> load_store(const std::string& path);

struct StoreFilter {
    std::string model_prefix; // empty matches everything
    std::string benchmark;    // exact match when nonempty
    std::string method;       // exact match when nonempty
    std::optional<ModelRole> model_role;
};

enum class SeriesLabel { step, model };

/// Reconstructs a score series from matching records. With step labels the
/// series is sorted by step; with model labels, lexicographically by
/// model_id. A duplicate key keeps the latest created_at and warns.
ScoreSeries load_series(const std::string& path, const StoreFilter& filter,
                        SeriesLabel label_by = SeriesLabel::step);

ScoreSeries series_from_records(const std::vector<RunRecord>& records,
                                const StoreFilter& filter,
                                SeriesLabel label_by = SeriesLabel::step);

std::string record_to_jsonl(const RunRecord& record);
RunRecord record_from_jsonl(const std::string& line, const std::string& origin, int lineno);

enum class ReportFormat { markdown, csv };

ReportFormat report_format_from_string(const std::string& s);

/// Original/treated/improve table with the AVG row, 3-decimal display.
/// Markdown and csv carry identical numbers.
std::string improvement_report(const ImprovementTable& table, const std::string& name_col,
                               const std::string& original_col, const std::string& treated_col,
                               ReportFormat format);

/// Experiments-by-methods score grid with per-method AVG and average-rank
/// rows; best score per experiment is bolded in markdown. scores is
/// row-major: scores[method][experiment].
std::string ablation_report(const std::vector<std::string>& methods,
                            const std::vector<std::string>& experiments,
                            const std::vector<std::vector<double>>& scores,
                            ReportFormat format);

/// Midrank positions (1 = best) averaged across experiments, one per method.
std::vector<double> average_ranks(const std::vector<std::vector<double>>& scores);

/// (step,score) csv for external plotting.
std::string series_csv(const ScoreSeries& series);

} // namespace bose
