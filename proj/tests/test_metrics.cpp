#include <doctest.h>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/util.hpp"

#include <cmath>
#include <random>

using namespace bose;

namespace {

// brute-force pair enumeration, independent of the library implementation
double oracle_tau(const std::vector<double>& a, const std::vector<double>& b,
                  long long* oracle_p = nullptr) {
    const std::size_t n = a.size();
    long long p = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if ((a[i] - a[j]) * (b[i] - b[j]) > 0.0) ++p;
        }
    }
    if (oracle_p) *oracle_p = p;
    return 4.0 * static_cast<double>(p) /
               (static_cast<double>(n) * (static_cast<double>(n) - 1.0)) -
           1.0;
}

std::vector<std::pair<std::string, double>> named(const std::vector<double>& values) {
    std::vector<std::pair<std::string, double>> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        rows.emplace_back("row" + std::to_string(i), values[i]);
    }
    return rows;
}

} // namespace

TEST_CASE("kendall_tau endpoint cases") {
    const std::vector<double> up{1, 2, 3, 4};
    const std::vector<double> down{4, 3, 2, 1};
    CHECK(kendall_tau(up, up).tau == 1.0);
    CHECK(kendall_tau(up, down).tau == -1.0);

    const std::vector<double> b{0.1, 0.3, 0.2, 0.4};
    const auto report = kendall_tau(up, b);
    CHECK(report.concordant == 5);
    CHECK(report.total_pairs == 6);
    CHECK(report.tau == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(report.tau == oracle_tau(up, b));
}

TEST_CASE("kendall_tau validates its input") {
    CHECK_THROWS_AS(kendall_tau(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    UsageError);
    CHECK_THROWS_AS(kendall_tau(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                    UsageError);
}

TEST_CASE("kendall_tau equals the brute-force oracle on random series with ties") {
    std::mt19937 rng(20240811);
    std::uniform_int_distribution<int> n_dist(2, 12);
    std::uniform_int_distribution<int> grid(0, 6); // ties are common on purpose
    for (int round = 0; round < 1000; ++round) {
        const int n = n_dist(rng);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = grid(rng) / 4.0;
            b[i] = grid(rng) / 4.0;
        }
        long long oracle_p = 0;
        const double expected = oracle_tau(a, b, &oracle_p);
        const auto report = kendall_tau(a, b);
        CHECK(report.concordant == oracle_p);
        CHECK(report.tau == expected);
    }
}

TEST_CASE("kendall_tau symmetry, transform invariance and negation") {
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int round = 0; round < 200; ++round) {
        const int n = 2 + static_cast<int>(rng() % 9);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        CHECK(kendall_tau(a, b).tau == kendall_tau(b, a).tau);

        // strictly increasing transforms leave tau alone
        auto ta = a;
        for (auto& x : ta) x = std::exp(3.0 * x) + x;
        CHECK(kendall_tau(ta, b).tau == kendall_tau(a, b).tau);

        auto neg = a;
        for (auto& x : neg) x = -x;
        CHECK(kendall_tau(a, neg).tau == -1.0);

        const auto report = kendall_tau(a, b);
        CHECK(report.tau >= -1.0);
        CHECK(report.tau <= 1.0);
        CHECK((report.tau == 1.0) == (report.concordant == report.total_pairs));
    }
}

TEST_CASE("tau variant b agrees with variant a when nothing ties") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 1, 4, 3, 5};
    CHECK(kendall_tau(a, b, TauVariant::b).tau ==
          doctest::Approx(kendall_tau(a, b, TauVariant::a).tau).epsilon(1e-12));

    // with ties the corrected variant reads higher than the plain formula
    const std::vector<double> tied{1, 1, 2, 3};
    const std::vector<double> other{1, 2, 3, 4};
    CHECK(kendall_tau(tied, other, TauVariant::b).tau >
          kendall_tau(tied, other, TauVariant::a).tau);
    CHECK(kendall_tau(tied, other).tie_pairs == 1);
}

TEST_CASE("stability over checkpoint series") {
    SUBCASE("monotone growth gives tau 1") {
        ScoreSeries s;
        s.labels = {"100", "200", "300", "400", "500"};
        s.values = {0.1, 0.2, 0.3, 0.4, 0.5};
        const auto report = stability(s);
        CHECK(report.tau == 1.0);
        CHECK(report.kind == TauKind::stability);
    }
    SUBCASE("the worked mid-training wobble") {
        ScoreSeries s;
        s.labels = {"1", "2", "3", "4", "5"};
        s.values = {0.10, 0.12, 0.11, 0.15, 0.14};
        const auto report = stability(s);
        CHECK(report.concordant == 8);
        CHECK(report.tau == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("labels are sorted numerically before pairing") {
        ScoreSeries shuffled;
        shuffled.labels = {"300", "100", "500", "200", "400"};
        shuffled.values = {0.3, 0.1, 0.5, 0.2, 0.4};
        CHECK(stability(shuffled).tau == 1.0);
        // "1000" must sort after "200" numerically, not lexically
        ScoreSeries wide;
        wide.labels = {"1000", "200"};
        wide.values = {0.9, 0.1};
        CHECK(stability(wide).tau == 1.0);
    }
    SUBCASE("a constant series scores -1 under the plain formula") {
        ScoreSeries s;
        s.labels = {"1", "2", "3"};
        s.values = {0.5, 0.5, 0.5};
        const auto report = stability(s);
        CHECK(report.concordant == 0);
        CHECK(report.tau == -1.0);
        CHECK(report.tie_pairs == 3);
    }
    SUBCASE("bad labels are rejected") {
        ScoreSeries s;
        s.labels = {"a", "2"};
        s.values = {0.1, 0.2};
        CHECK_THROWS_AS(stability(s), DataError);
        s.labels = {"2", "2"};
        CHECK_THROWS_AS(stability(s), DataError);
    }
}

TEST_CASE("consistency aligns by label, not by position") {
    ScoreSeries base;
    base.labels = {"m1", "m2", "m3"};
    base.values = {1, 2, 3};
    ScoreSeries instruct;
    instruct.labels = {"m1", "m2", "m3"};
    instruct.values = {1, 3, 2};
    const auto report = consistency(base, instruct);
    CHECK(report.concordant == 2);
    CHECK(report.tau == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(report.kind == TauKind::consistency);

    // permuting the instruct series changes nothing
    ScoreSeries permuted;
    permuted.labels = {"m3", "m1", "m2"};
    permuted.values = {2, 1, 3};
    CHECK(consistency(base, permuted).tau == report.tau);

    ScoreSeries six_a, six_b;
    for (int i = 0; i < 6; ++i) {
        six_a.labels.push_back("m" + std::to_string(i));
        six_a.values.push_back(i * 0.1);
        six_b.labels.push_back("m" + std::to_string(i));
        six_b.values.push_back(i * 0.2 + 0.05);
    }
    CHECK(consistency(six_a, six_b).tau == 1.0);

    ScoreSeries missing;
    missing.labels = {"m1", "mX", "m3"};
    missing.values = {1, 2, 3};
    CHECK_THROWS_WITH_AS(consistency(missing, instruct), doctest::Contains("mX"), DataError);
}

// Reference tau columns frozen as fixtures, with their known AVG rows.
namespace tables {
const std::vector<double> stab_1b_original{0.418, 0.375, 0.537, 0.345, 0.264,
                                         0.099, 0.637, 0.754, 0.382};
const std::vector<double> stab_1b_bose{0.669, 0.234, 0.629, 0.684, 0.089,
                                     0.146, 0.845, 0.895, 0.778};
const std::vector<double> stab_2b_original{0.524, 0.376, 0.543, 0.691, 0.296,
                                         0.324, 0.795, 0.941, 0.603};
const std::vector<double> stab_2b_bose{0.736, 0.617, 0.597, 0.721, 0.200,
                                     0.362, 0.834, 0.893, 0.874};
const std::vector<double> family_original{0.467, 0.467, 0.467, 0.467, 0.000, 0.602};
const std::vector<double> family_iclip{0.867, 0.867, 0.867, 0.733, 0.600, 0.733};
const std::vector<double> ckpt_original{-0.070, 0.050, 0.020, 0.142, 0.314, -0.017};
const std::vector<double> ckpt_iclip{0.367, -0.150, 0.128, 0.483, 0.507, 0.230};
} // namespace tables

TEST_CASE("improvement reproduces the reference AVG rows") {
    struct Case {
        const std::vector<double>& original;
        const std::vector<double>& treated;
        double avg_original, avg_treated, avg_delta;
    };
    const Case cases[] = {
        {tables::stab_1b_original, tables::stab_1b_bose, 0.423, 0.552, 0.129},
        {tables::stab_2b_original, tables::stab_2b_bose, 0.566, 0.648, 0.082},
        {tables::family_original, tables::family_iclip, 0.412, 0.778, 0.366},
        {tables::ckpt_original, tables::ckpt_iclip, 0.073, 0.261, 0.188},
    };
    for (const auto& c : cases) {
        const auto table = improvement(named(c.original), named(c.treated));
        CHECK(round_half_up(table.avg.original, 3) == doctest::Approx(c.avg_original));
        CHECK(round_half_up(table.avg.treated, 3) == doctest::Approx(c.avg_treated));
        CHECK(round_half_up(table.avg.delta, 3) == doctest::Approx(c.avg_delta));
    }
}

TEST_CASE("improvement reproduces the reference percentage gains") {
    const auto stab_1b = improvement(named(tables::stab_1b_original), named(tables::stab_1b_bose));
    REQUIRE(stab_1b.has_pct);
    CHECK(stab_1b.pct_improvement == doctest::Approx(30.5).epsilon(0.0033)); // +-0.1pp

    const auto stab_2b = improvement(named(tables::stab_2b_original), named(tables::stab_2b_bose));
    CHECK(stab_2b.pct_improvement == doctest::Approx(14.5).epsilon(0.0069));

    const auto family = improvement(named(tables::family_original), named(tables::family_iclip));
    CHECK(family.pct_improvement == doctest::Approx(88.9).epsilon(0.0012));
}

TEST_CASE("improvement keeps negative deltas and validates names") {
    const auto table = improvement({{"CMath", 0.418}, {"Minerva", 0.264}},
                                   {{"CMath", 0.669}, {"Minerva", 0.089}});
    CHECK(table.rows[1].delta == doctest::Approx(-0.175).epsilon(1e-12));

    CHECK_THROWS_AS(improvement({{"a", 1.0}}, {{"b", 1.0}}), UsageError);
    CHECK_THROWS_AS(improvement({{"a", 1.0}}, {{"a", 1.0}, {"b", 2.0}}), UsageError);
    CHECK_THROWS_AS(improvement({}, {}), UsageError);
}

TEST_CASE("accuracy over verdicts") {
    std::vector<Verdict> verdicts(4);
    verdicts[0].correct = true;
    verdicts[1].correct = true;
    verdicts[2].correct = true;
    CHECK(accuracy(verdicts) == 0.75);
    for (auto& v : verdicts) v.correct = false;
    CHECK(accuracy(verdicts) == 0.0);
    for (auto& v : verdicts) v.correct = true;
    CHECK(accuracy(verdicts) == 1.0);
    CHECK_THROWS_AS(accuracy({}), UsageError);
}

TEST_CASE("display rounding is half away from zero") {
    CHECK(format_fixed(0.4116666, 3) == "0.412");
    CHECK(format_fixed(0.3661666, 3) == "0.366");
    CHECK(format_fixed(-0.141, 3) == "-0.141");
    CHECK(format_fixed(0.0, 3) == "0.000");
    // exactly representable half-way points round away from zero
    CHECK(format_fixed(0.25, 1) == "0.3");
    CHECK(format_fixed(-0.25, 1) == "-0.3");
    CHECK(format_fixed(2.5, 0) == "3");
}
