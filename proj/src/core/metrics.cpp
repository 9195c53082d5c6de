#include "metrics.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace bose {

void ScoreSeries::validate() const {
    if (labels.size() != values.size()) {
        throw DataError("score series has " + std::to_string(labels.size()) +
                        " labels but " + std::to_string(values.size()) + " values");
    }
    if (labels.size() < 2) throw DataError("score series needs at least 2 entries");
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw DataError("duplicate series label '" + l + "'");
    }
}

TauVariant tau_variant_from_string(const std::string& s) {
    if (s == "a") return TauVariant::a;
    if (s == "b") return TauVariant::b;
    throw UsageError("unknown tau variant '" + s + "' (expected a or b)");
}

TauReport kendall_tau(std::span<const double> a, std::span<const double> b,
                      TauVariant variant) {
    const std::size_t n = a.size();
    if (n != b.size()) {
        throw UsageError("kendall_tau: series lengths differ (" + std::to_string(n) +
                         " vs " + std::to_string(b.size()) + ")");
    }
    if (n < 2) throw UsageError("kendall_tau needs at least 2 entries");

    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t ties_a = 0;
    std::int64_t ties_b = 0;
    std::int64_t ties_any = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 || db == 0.0) {
                if (da == 0.0) ++ties_a;
                if (db == 0.0) ++ties_b;
                ++ties_any;
            } else if (da * db > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }

    TauReport report;
    report.concordant = concordant;
    report.total_pairs = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    report.tie_pairs = ties_any;
    if (variant == TauVariant::a) {
        report.tau = 4.0 * static_cast<double>(concordant) /
                         (static_cast<double>(n) * (static_cast<double>(n) - 1.0)) -
                     1.0;
    } else {
        const double denom =
            std::sqrt(static_cast<double>(report.total_pairs - ties_a)) *
            std::sqrt(static_cast<double>(report.total_pairs - ties_b));
        if (denom == 0.0) {
            warn("tau-b undefined for a fully tied series, reporting 0");
            report.tau = 0.0;
        } else {
            report.tau = static_cast<double>(concordant - discordant) / denom;
        }
    }
    return report;
}

TauReport stability(const ScoreSeries& series, TauVariant variant) {
    series.validate();
    std::vector<std::pair<long long, double>> by_step;
    by_step.reserve(series.labels.size());
    for (std::size_t i = 0; i < series.labels.size(); ++i) {
        const std::string& label = series.labels[i];
        long long step = 0;
        const char* first = label.data();
        const char* last = label.data() + label.size();
        auto [ptr, ec] = std::from_chars(first, last, step);
        if (ec != std::errc() || ptr != last) {
            throw DataError("stability: label '" + label + "' is not a numeric step");
        }
        by_step.emplace_back(step, series.values[i]);
    }
    std::sort(by_step.begin(), by_step.end());
    for (std::size_t i = 0; i + 1 < by_step.size(); ++i) {
        if (by_step[i].first == by_step[i + 1].first) {
            throw DataError("stability: duplicate step " + std::to_string(by_step[i].first));
        }
    }
    std::vector<double> order(by_step.size());
    std::vector<double> scores(by_step.size());
    for (std::size_t i = 0; i < by_step.size(); ++i) {
        order[i] = static_cast<double>(i);
        scores[i] = by_step[i].second;
    }
    TauReport report = kendall_tau(order, scores, variant);
    report.kind = TauKind::stability;
    if (report.tie_pairs > 0) {
        warn("stability: " + std::to_string(report.tie_pairs) +
             " tied score pair(s) count against tau");
    }
    return report;
}

TauReport consistency(const ScoreSeries& base, const ScoreSeries& instruct,
                      TauVariant variant) {
    base.validate();
    instruct.validate();
    std::map<std::string, double> instruct_by_label;
    for (std::size_t i = 0; i < instruct.labels.size(); ++i) {
        instruct_by_label[instruct.labels[i]] = instruct.values[i];
    }
    std::vector<double> base_vals;
    std::vector<double> instr_vals;
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
        const auto it = instruct_by_label.find(base.labels[i]);
        if (it == instruct_by_label.end()) {
            throw DataError("consistency: no instruct partner for label '" +
                            base.labels[i] + "'");
        }
        base_vals.push_back(base.values[i]);
        instr_vals.push_back(it->second);
        instruct_by_label.erase(it);
    }
    if (!instruct_by_label.empty()) {
        throw DataError("consistency: no base partner for label '" +
                        instruct_by_label.begin()->first + "'");
    }
    TauReport report = kendall_tau(base_vals, instr_vals, variant);
    report.kind = TauKind::consistency;
    if (report.tie_pairs > 0) {
        warn("consistency: " + std::to_string(report.tie_pairs) +
             " tied score pair(s) count against tau");
    }
    return report;
}

ImprovementTable improvement(const std::vector<std::pair<std::string, double>>& original,
                             const std::vector<std::pair<std::string, double>>& treated) {
    if (original.empty()) throw UsageError("improvement requires at least one row");
    if (original.size() != treated.size()) {
        throw UsageError("improvement: row counts differ");
    }
    std::map<std::string, double> treated_by_name;
    for (const auto& [name, value] : treated) {
        if (!treated_by_name.emplace(name, value).second) {
            throw UsageError("improvement: duplicate name '" + name + "'");
        }
    }

    ImprovementTable table;
    double sum_orig = 0.0;
    double sum_treat = 0.0;
    for (const auto& [name, value] : original) {
        const auto it = treated_by_name.find(name);
        if (it == treated_by_name.end()) {
            throw UsageError("improvement: no treated value for '" + name + "'");
        }
        ImprovementRow row{name, value, it->second, it->second - value};
        sum_orig += row.original;
        sum_treat += row.treated;
        table.rows.push_back(std::move(row));
        treated_by_name.erase(it);
    }
    if (!treated_by_name.empty()) {
        throw UsageError("improvement: no original value for '" +
                         treated_by_name.begin()->first + "'");
    }

    const double n = static_cast<double>(table.rows.size());
    table.avg = {"AVG", sum_orig / n, sum_treat / n, (sum_treat - sum_orig) / n};

    // percentages quoted against the displayed (rounded) averages
    const double orig_r = round_half_up(table.avg.original, 3);
    const double delta_r = round_half_up(table.avg.delta, 3);
    if (orig_r != 0.0) {
        table.has_pct = true;
        const double pct = 100.0 * delta_r / orig_r;
        table.pct_improvement = pct == 0.0 ? 0.0 : pct; // avoid -0.0
    }
    return table;
}

double accuracy(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) throw UsageError("accuracy requires at least one verdict");
    std::size_t scored = 0;
    std::size_t correct = 0;
    for (const auto& v : verdicts) {
        if (v.errored) continue;
        ++scored;
        if (v.correct) ++correct;
    }
    if (scored == 0) throw DataError("accuracy: all verdicts errored");
    return static_cast<double>(correct) / static_cast<double>(scored);
}

} // namespace bose
