#include "store.hpp"

#include "error.hpp"
#include "util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

using nlohmann::json;

namespace bose {

namespace {

json verdict_to_json(const Verdict& v) {
    json obj;
    obj["sample_id"] = v.sample_id;
    obj["raw_output"] = v.raw_output;
    if (v.extracted) obj["extracted"] = *v.extracted;
    if (v.normalized_pred) obj["normalized_pred"] = *v.normalized_pred;
    obj["normalized_gold"] = v.normalized_gold;
    obj["correct"] = v.correct;
    obj["judge_mode"] = to_string(v.judge_mode);
    if (v.truncated) obj["truncated"] = true;
    if (v.errored) {
        obj["errored"] = true;
        obj["error"] = v.error;
    }
    return obj;
}

Verdict verdict_from_json(const json& obj) {
    Verdict v;
    v.sample_id = obj.at("sample_id").get<std::string>();
    v.raw_output = obj.value("raw_output", "");
    if (obj.contains("extracted")) v.extracted = obj["extracted"].get<std::string>();
    if (obj.contains("normalized_pred")) {
        v.normalized_pred = obj["normalized_pred"].get<std::string>();
    }
    v.normalized_gold = obj.value("normalized_gold", "");
    v.correct = obj.value("correct", false);
    v.judge_mode = judge_mode_from_string(obj.value("judge_mode", "normalized"));
    v.truncated = obj.value("truncated", false);
    v.errored = obj.value("errored", false);
    v.error = obj.value("error", "");
    return v;
}

json ppl_row_to_json(const PplRow& r) {
    json obj;
    obj["sample_id"] = r.sample_id;
    obj["ppls"] = r.ppls;
    obj["chosen"] = r.chosen;
    obj["gold"] = r.gold;
    obj["correct"] = r.correct;
    if (r.errored) {
        obj["errored"] = true;
        obj["error"] = r.error;
    }
    return obj;
}

PplRow ppl_row_from_json(const json& obj) {
    PplRow r;
    r.sample_id = obj.at("sample_id").get<std::string>();
    if (obj.contains("ppls")) r.ppls = obj["ppls"].get<std::vector<double>>();
    r.chosen = obj.value("chosen", -1);
    r.gold = obj.value("gold", -1);
    r.correct = obj.value("correct", false);
    r.errored = obj.value("errored", false);
    r.error = obj.value("error", "");
    return r;
}

void validate_record(const RunRecord& record, const std::string& where) {
    if (record.run_id.empty()) throw DataError(where + ": empty run_id");
    if (record.schema != 1) {
        throw DataError(where + ": unsupported schema " + std::to_string(record.schema));
    }
    if (record.verdicts.empty() == record.ppl_rows.empty()) {
        throw DataError(where + ": record '" + record.run_id +
                        "' must carry exactly one payload kind");
    }
    const std::size_t scored = record.scored_count();
    if (scored == 0) throw DataError(where + ": record '" + record.run_id + "' scores nothing");
    const double recomputed =
        static_cast<double>(record.correct_count()) / static_cast<double>(scored);
    if (std::abs(recomputed - record.accuracy) > 1e-12) {
        throw DataError(where + ": record '" + record.run_id +
                        "' stores accuracy " + std::to_string(record.accuracy) +
                        " but its payload recomputes to " + std::to_string(recomputed));
    }
}

} // namespace

std::string record_to_jsonl(const RunRecord& record) {
    json obj;
    obj["schema"] = record.schema;
    obj["run_id"] = record.run_id;
    obj["model_id"] = record.model_id;
    if (record.step) obj["step"] = *record.step;
    obj["model_role"] = to_string(record.model_role);
    obj["benchmark"] = record.benchmark;
    obj["method"] = record.method;
    obj["accuracy"] = record.accuracy;
    obj["config_digest"] = record.config_digest;
    obj["created_at"] = iso8601_utc(record.created_at_ms);
    obj["created_at_ms"] = record.created_at_ms;
    if (record.skip_errors) obj["skip_errors"] = true;
    if (!record.verdicts.empty()) {
        json arr = json::array();
        for (const auto& v : record.verdicts) arr.push_back(verdict_to_json(v));
        obj["verdicts"] = std::move(arr);
    }
    if (!record.ppl_rows.empty()) {
        json arr = json::array();
        for (const auto& r : record.ppl_rows) arr.push_back(ppl_row_to_json(r));
        obj["ppl"] = std::move(arr);
    }
    return obj.dump();
}

RunRecord record_from_jsonl(const std::string& line, const std::string& origin, int lineno) {
    const std::string where = origin + ":" + std::to_string(lineno);
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(where + ": parse error: " + e.what());
    }
    RunRecord record;
    try {
        record.schema = obj.value("schema", 1);
        record.run_id = obj.at("run_id").get<std::string>();
        record.model_id = obj.value("model_id", "");
        if (obj.contains("step") && !obj["step"].is_null()) {
            record.step = obj["step"].get<std::int64_t>();
        }
        record.model_role = model_role_from_string(obj.value("model_role", "base"));
        record.benchmark = obj.at("benchmark").get<std::string>();
        record.method = obj.at("method").get<std::string>();
        record.accuracy = obj.at("accuracy").get<double>();
        record.config_digest = obj.value("config_digest", "");
        record.created_at_ms = obj.value("created_at_ms", std::int64_t{0});
        record.skip_errors = obj.value("skip_errors", false);
        if (obj.contains("verdicts")) {
            for (const json& v : obj["verdicts"]) {
                record.verdicts.push_back(verdict_from_json(v));
            }
        }
        if (obj.contains("ppl")) {
            for (const json& r : obj["ppl"]) record.ppl_rows.push_back(ppl_row_from_json(r));
        }
    } catch (const json::exception& e) {
        throw DataError(where + ": " + e.what());
    }
    validate_record(record, where);
    return record;
}

namespace {

struct LockedFile {
    int fd = -1;
    explicit LockedFile(const std::string& path) {
        fd = ::open(path.c_str(), O_CREAT | O_RDWR | O_APPEND, 0644);
        if (fd < 0) throw IoError("cannot open store '" + path + "': " + std::strerror(errno));
        if (::flock(fd, LOCK_EX) != 0) {
            const int err = errno;
            ::close(fd);
            throw IoError("cannot lock store '" + path + "': " + std::strerror(err));
        }
    }
    ~LockedFile() {
        if (fd >= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
    }
    LockedFile(const LockedFile&) = delete;
    LockedFile& operator=(const LockedFile&) = delete;
};

std::string read_all(int fd) {
    std::string content;
    char buf[65536];
    ::lseek(fd, 0, SEEK_SET);
    for (;;) {
        const ssize_t n = ::read(fd, buf, sizeof(buf));
        if (n < 0) throw IoError(std::string("store read failed: ") + std::strerror(errno));
        if (n == 0) break;
        content.append(buf, static_cast<std::size_t>(n));
    }
    return content;
}

} // namespace

void append_run(const std::string& path, const RunRecord& record) {
    validate_record(record, "append_run");
    const std::string line = record_to_jsonl(record) + "\n";

    LockedFile file(path);
    // duplicate scan under the lock, against whatever is on disk right now
    std::istringstream existing(read_all(file.fd));
    std::string prev;
    int lineno = 0;
    while (std::getline(existing, prev)) {
        ++lineno;
        if (prev.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(prev);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
        }
        if (obj.value("run_id", "") == record.run_id) {
            throw DataError("store '" + path + "' already holds run_id '" + record.run_id +
                            "' (line " + std::to_string(lineno) + ")");
        }
    }
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = ::write(file.fd, line.data() + written, line.size() - written);
        if (n < 0) throw IoError(std::string("store write failed: ") + std::strerror(errno));
        written += static_cast<std::size_t>(n);
    }
}

std::vector<RunRecord> load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store '" + path + "'");
    std::vector<RunRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        records.push_back(record_from_jsonl(line, path, lineno));
    }
    return records;
}

namespace {

bool matches(const RunRecord& record, const StoreFilter& filter) {
    if (!filter.model_prefix.empty() &&
        record.model_id.rfind(filter.model_prefix, 0) != 0) {
        return false;
    }
    if (!filter.benchmark.empty() && record.benchmark != filter.benchmark) return false;
    if (!filter.method.empty() && record.method != filter.method) return false;
    if (filter.model_role && record.model_role != *filter.model_role) return false;
    return true;
}

} // namespace

ScoreSeries series_from_records(const std::vector<RunRecord>& records,
                                const StoreFilter& filter, SeriesLabel label_by) {
    struct Entry {
        double value;
        std::int64_t created_at_ms;
        std::string model_id;
    };
    // key: step for checkpoint series, model_id for family series
    std::map<std::int64_t, Entry> by_step;
    std::map<std::string, Entry> by_model;

    for (const auto& record : records) {
        if (!matches(record, filter)) continue;
        if (label_by == SeriesLabel::step) {
            if (!record.step) continue; // family-level records carry no step
            auto [it, inserted] = by_step.try_emplace(
                *record.step, Entry{record.accuracy, record.created_at_ms, record.model_id});
            if (!inserted) {
                if (it->second.model_id != record.model_id) {
                    throw DataError("step " + std::to_string(*record.step) +
                                    " is matched by models '" + it->second.model_id +
                                    "' and '" + record.model_id +
                                    "'; narrow the model prefix filter");
                }
                warn("duplicate record for step " + std::to_string(*record.step) +
                     " (benchmark '" + record.benchmark + "', method '" + record.method +
                     "'), keeping the latest");
                if (record.created_at_ms > it->second.created_at_ms) {
                    it->second = {record.accuracy, record.created_at_ms, record.model_id};
                }
            }
        } else {
            auto [it, inserted] = by_model.try_emplace(
                record.model_id, Entry{record.accuracy, record.created_at_ms, record.model_id});
            if (!inserted) {
                warn("duplicate record for model '" + record.model_id + "' (benchmark '" +
                     record.benchmark + "', method '" + record.method +
                     "'), keeping the latest");
                if (record.created_at_ms > it->second.created_at_ms) {
                    it->second = {record.accuracy, record.created_at_ms, record.model_id};
                }
            }
        }
    }

    ScoreSeries series;
    if (label_by == SeriesLabel::step) {
        for (const auto& [step, entry] : by_step) {
            series.labels.push_back(std::to_string(step));
            series.values.push_back(entry.value);
        }
    } else {
        for (const auto& [model, entry] : by_model) {
            series.labels.push_back(model);
            series.values.push_back(entry.value);
        }
    }
    if (series.labels.size() < 2) {
        throw DataError("fewer than 2 records match the series filter (benchmark '" +
                        filter.benchmark + "', method '" + filter.method + "')");
    }
    return series;
}

ScoreSeries load_series(const std::string& path, const StoreFilter& filter,
                        SeriesLabel label_by) {
    return series_from_records(load_store(path), filter, label_by);
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    if (s == "csv") return ReportFormat::csv;
    throw UsageError("unknown report format '" + s + "' (expected markdown or csv)");
}

std::string improvement_report(const ImprovementTable& table, const std::string& name_col,
                               const std::string& original_col, const std::string& treated_col,
                               ReportFormat format) {
    std::string out;
    auto value = [](double v) { return format_fixed(v, 3); };
    if (format == ReportFormat::markdown) {
        out += "| " + name_col + " | " + original_col + " | " + treated_col + " | Improve |\n";
        out += "| --- | ---: | ---: | ---: |\n";
        for (const auto& row : table.rows) {
            out += "| " + row.name + " | " + value(row.original) + " | " +
                   value(row.treated) + " | " + value(row.delta) + " |\n";
        }
        out += "| AVG | " + value(table.avg.original) + " | " + value(table.avg.treated) +
               " | " + value(table.avg.delta) + " |\n";
    } else {
        out += name_col + "," + original_col + "," + treated_col + ",Improve\n";
        for (const auto& row : table.rows) {
            out += row.name + "," + value(row.original) + "," + value(row.treated) + "," +
                   value(row.delta) + "\n";
        }
        out += "AVG," + value(table.avg.original) + "," + value(table.avg.treated) + "," +
               value(table.avg.delta) + "\n";
    }
    return out;
}

std::vector<double> average_ranks(const std::vector<std::vector<double>>& scores) {
    if (scores.empty() || scores.front().empty()) {
        throw UsageError("average_ranks requires a nonempty score grid");
    }
    const std::size_t n_methods = scores.size();
    const std::size_t n_experiments = scores.front().size();
    for (const auto& row : scores) {
        if (row.size() != n_experiments) throw UsageError("ragged score grid");
    }

    std::vector<double> rank_sum(n_methods, 0.0);
    for (std::size_t e = 0; e < n_experiments; ++e) {
        // midrank assignment over scores sorted descending
        std::vector<std::size_t> order(n_methods);
        for (std::size_t m = 0; m < n_methods; ++m) order[m] = m;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return scores[x][e] > scores[y][e];
        });
        std::size_t i = 0;
        while (i < n_methods) {
            std::size_t j = i;
            while (j + 1 < n_methods && scores[order[j + 1]][e] == scores[order[i]][e]) ++j;
            const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k) rank_sum[order[k]] += midrank;
            i = j + 1;
        }
    }
    for (auto& r : rank_sum) r /= static_cast<double>(n_experiments);
    return rank_sum;
}

std::string ablation_report(const std::vector<std::string>& methods,
                            const std::vector<std::string>& experiments,
                            const std::vector<std::vector<double>>& scores,
                            ReportFormat format) {
    if (methods.empty() || experiments.empty()) {
        throw UsageError("ablation_report requires methods and experiments");
    }
    if (scores.size() != methods.size()) throw UsageError("score grid/method mismatch");
    for (const auto& row : scores) {
        if (row.size() != experiments.size()) throw UsageError("ragged score grid");
    }
    const auto ranks = average_ranks(scores);
    auto value = [](double v) { return format_fixed(v, 3); };

    std::vector<double> avg(methods.size(), 0.0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (double v : scores[m]) avg[m] += v;
        avg[m] /= static_cast<double>(experiments.size());
    }

    std::string out;
    if (format == ReportFormat::markdown) {
        out += "| Benchmark |";
        for (const auto& m : methods) out += " " + m + " |";
        out += "\n| --- |";
        for (std::size_t m = 0; m < methods.size(); ++m) out += " ---: |";
        out += "\n";
        for (std::size_t e = 0; e < experiments.size(); ++e) {
            double best = scores[0][e];
            for (std::size_t m = 1; m < methods.size(); ++m) {
                best = std::max(best, scores[m][e]);
            }
            out += "| " + experiments[e] + " |";
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const std::string cell = value(scores[m][e]);
                out += scores[m][e] == best ? " **" + cell + "** |" : " " + cell + " |";
            }
            out += "\n";
        }
        out += "| AVG |";
        for (std::size_t m = 0; m < methods.size(); ++m) out += " " + value(avg[m]) + " |";
        out += "\n| AvgRank |";
        double best_rank = *std::min_element(ranks.begin(), ranks.end());
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const std::string cell = format_fixed(ranks[m], 2);
            out += ranks[m] == best_rank ? " **" + cell + "** |" : " " + cell + " |";
        }
        out += "\n";
    } else {
        out += "benchmark";
        for (const auto& m : methods) out += "," + m;
        out += "\n";
        for (std::size_t e = 0; e < experiments.size(); ++e) {
            out += experiments[e];
            for (std::size_t m = 0; m < methods.size(); ++m) {
                out += "," + value(scores[m][e]);
            }
            out += "\n";
        }
        out += "AVG";
        for (std::size_t m = 0; m < methods.size(); ++m) out += "," + value(avg[m]);
        out += "\nAvgRank";
        for (std::size_t m = 0; m < methods.size(); ++m) out += "," + format_fixed(ranks[m], 2);
        out += "\n";
    }
    return out;
}

std::string series_csv(const ScoreSeries& series) {
    std::string out = "step,score\n";
    for (std::size_t i = 0; i < series.labels.size(); ++i) {
        out += series.labels[i] + "," + format_fixed(series.values[i], 6) + "\n";
    }
    return out;
}

} // namespace bose
