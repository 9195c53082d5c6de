#pragma once

#include "run_record.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bose {

/// Accuracy series over checkpoint steps or model ids.
struct ScoreSeries {
    std::vector<std::string> labels;
    std::vector<double> values;

    void validate() const; // equal lengths >= 2, unique labels
};

enum class TauKind { stability, consistency };
enum class TauVariant { a, b };

TauVariant tau_variant_from_string(const std::string& s);

struct TauReport {
    double tau = 0.0;
    std::int64_t concordant = 0;  // P
    std::int64_t total_pairs = 0; // n(n-1)/2
    std::int64_t tie_pairs = 0;   // pairs tied in either list
    TauKind kind = TauKind::stability;
};

/// Rank correlation per 4P/(n(n-1)) - 1 with P the concordant pair count.
/// Tied pairs are simply not concordant, so they depress tau; variant b
/// applies the usual tie correction instead and is never the default.
TauReport kendall_tau(std::span<const double> a, std::span<const double> b,
                      TauVariant variant = TauVariant::a);

/// Tau between checkpoint order and scores. Labels must parse as unique
/// numeric steps; the series is sorted by step first.
TauReport stability(const ScoreSeries& series, TauVariant variant = TauVariant::a);

/// Tau between base and instruct scores aligned by label.
TauReport consistency(const ScoreSeries& base, const ScoreSeries& instruct,
                      TauVariant variant = TauVariant::a);

struct ImprovementRow {
    std::string name;
    double original = 0.0;
    double treated = 0.0;
    double delta = 0.0;
};

/// Per-row deltas plus the AVG row. Values stay full precision; display
/// rounding is 3 decimals half-up. pct_improvement is the AVG delta over
/// the AVG original, both display-rounded first, as a percentage.
struct ImprovementTable {
    std::vector<ImprovementRow> rows;
    ImprovementRow avg; // name "AVG"
    bool has_pct = false;
    double pct_improvement = 0.0;
};

ImprovementTable improvement(const std::vector<std::pair<std::string, double>>& original,
                             const std::vector<std::pair<std::string, double>>& treated);

/// Fraction of correct verdicts. Errored entries are not counted.
double accuracy(const std::vector<Verdict>& verdicts);

} // namespace bose
