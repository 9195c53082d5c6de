#include <doctest.h>

#include "test_util.hpp"

#include "core/error.hpp"
#include "core/store.hpp"
#include "core/util.hpp"

#include <set>
#include <thread>

using namespace bose;

namespace {

// k of n correct, payload consistent with the stored accuracy
RunRecord make_record(const std::string& model, std::int64_t step, const std::string& bench,
                      const std::string& method, int correct, int total,
                      ModelRole role = ModelRole::base, std::int64_t created_ms = 1000) {
    RunRecord record;
    record.model_id = model;
    if (step >= 0) record.step = step;
    record.model_role = role;
    record.benchmark = bench;
    record.method = method;
    record.created_at_ms = created_ms;
    record.config_digest = "digest";
    for (int i = 0; i < total; ++i) {
        Verdict v;
        v.sample_id = "s" + std::to_string(i);
        v.raw_output = "raw " + std::to_string(i);
        v.normalized_gold = "g";
        v.correct = i < correct;
        if (v.correct) {
            v.extracted = "g";
            v.normalized_pred = "g";
        }
        record.verdicts.push_back(std::move(v));
    }
    record.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    record.run_id = compute_run_id(record);
    return record;
}

} // namespace

TEST_CASE("append three records and load them back") {
    testutil::TempFile store("append3");
    append_run(store.path, make_record("m", 100, "b", "iclip", 1, 2));
    append_run(store.path, make_record("m", 200, "b", "iclip", 2, 2));
    append_run(store.path, make_record("m", 300, "b", "iclip", 0, 2));
    const auto records = load_store(store.path);
    REQUIRE(records.size() == 3);
    CHECK(records[1].accuracy == 1.0);
    CHECK(records[2].step == 300);
}

TEST_CASE("a record round-trips every field") {
    testutil::TempFile store("roundtrip");
    RunRecord record = make_record("model-x", 1234, "bench", "blank_ppl", 0, 0);
    record.verdicts.clear();
    PplRow row;
    row.sample_id = "p1";
    row.ppls = {1.5, 2.25, 3.0};
    row.chosen = 0;
    row.gold = 0;
    row.correct = true;
    record.ppl_rows.push_back(row);
    PplRow errored;
    errored.sample_id = "p2";
    errored.errored = true;
    errored.error = "backend down";
    record.ppl_rows.push_back(errored);
    record.skip_errors = true;
    record.model_role = ModelRole::instruct;
    record.accuracy = 1.0;
    record.run_id = compute_run_id(record);

    append_run(store.path, record);
    const auto loaded = load_store(store.path);
    REQUIRE(loaded.size() == 1);
    const auto& got = loaded[0];
    CHECK(got.run_id == record.run_id);
    CHECK(got.model_id == "model-x");
    CHECK(got.step == 1234);
    CHECK(got.model_role == ModelRole::instruct);
    CHECK(got.benchmark == "bench");
    CHECK(got.method == "blank_ppl");
    CHECK(got.accuracy == 1.0);
    CHECK(got.config_digest == "digest");
    CHECK(got.created_at_ms == record.created_at_ms);
    CHECK(got.skip_errors);
    REQUIRE(got.ppl_rows.size() == 2);
    CHECK(got.ppl_rows[0].ppls == row.ppls);
    CHECK(got.ppl_rows[1].errored);
    CHECK(got.ppl_rows[1].error == "backend down");
}

TEST_CASE("duplicate run ids are rejected and the file stays intact") {
    testutil::TempFile store("dup");
    const auto record = make_record("m", 1, "b", "iclip", 1, 1);
    append_run(store.path, record);
    const std::string before = testutil::read_file(store.path);
    CHECK_THROWS_WITH_AS(append_run(store.path, record),
                         doctest::Contains(record.run_id.c_str()), DataError);
    CHECK(testutil::read_file(store.path) == before);
}

TEST_CASE("tampered accuracies are caught on load") {
    testutil::TempFile store("tamper");
    const auto record = make_record("m", 1, "b", "iclip", 1, 2);
    std::string line = record_to_jsonl(record);
    const auto pos = line.find("\"accuracy\":0.5");
    REQUIRE(pos != std::string::npos);
    line.replace(pos, 14, "\"accuracy\":0.9");
    store.write(line + "\n");
    CHECK_THROWS_WITH_AS(load_store(store.path), doctest::Contains("recomputes"), DataError);
}

TEST_CASE("concurrent appends from 4 workers produce 100 clean lines") {
    testutil::TempFile store("concurrent");
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&store, w] {
            for (int i = 0; i < 25; ++i) {
                append_run(store.path,
                           make_record("m" + std::to_string(w), w * 1000 + i, "b", "iclip", 1,
                                       1, ModelRole::base, w * 1000 + i));
            }
        });
    }
    for (auto& t : workers) t.join();

    const auto records = load_store(store.path); // parses, so no torn lines
    REQUIRE(records.size() == 100);
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.run_id);
    CHECK(ids.size() == 100);
}

TEST_CASE("load_series slices, sorts and deduplicates") {
    testutil::TempFile store("series");
    // shuffled steps, two methods, one foreign model
    append_run(store.path, make_record("ours-1b", 300, "b", "iclip", 3, 10));
    append_run(store.path, make_record("ours-1b", 100, "b", "iclip", 1, 10));
    append_run(store.path, make_record("ours-1b", 500, "b", "iclip", 5, 10));
    append_run(store.path, make_record("ours-1b", 200, "b", "iclip", 2, 10));
    append_run(store.path, make_record("ours-1b", 400, "b", "iclip", 4, 10));
    append_run(store.path, make_record("ours-1b", 100, "b", "instruct_0shot", 9, 10));
    append_run(store.path, make_record("ours-1b", 200, "b", "instruct_0shot", 8, 10));
    append_run(store.path, make_record("theirs", 9999, "b", "iclip", 1, 10));

    StoreFilter filter;
    filter.model_prefix = "ours";
    filter.benchmark = "b";
    filter.method = "iclip";
    const auto series = load_series(store.path, filter);
    REQUIRE(series.labels.size() == 5);
    CHECK(series.labels == std::vector<std::string>{"100", "200", "300", "400", "500"});
    CHECK(series.values == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});

    SUBCASE("a later duplicate wins") {
        append_run(store.path,
                   make_record("ours-1b", 300, "b", "iclip", 9, 10, ModelRole::base,
                               /*created_ms=*/999999));
        const auto updated = load_series(store.path, filter);
        CHECK(updated.values[2] == 0.9);
    }
    SUBCASE("colliding steps from different models are an error") {
        append_run(store.path, make_record("ours-2b", 300, "b", "iclip", 9, 10));
        CHECK_THROWS_WITH_AS(load_series(store.path, filter),
                             doctest::Contains("model prefix"), DataError);
    }
    SUBCASE("fewer than two matches is an error") {
        StoreFilter narrow = filter;
        narrow.method = "missing";
        CHECK_THROWS_AS(load_series(store.path, narrow), DataError);
    }
    SUBCASE("model-labeled series for family comparisons") {
        append_run(store.path, make_record("alpha", -1, "b", "iclip", 4, 10));
        append_run(store.path, make_record("beta", -1, "b", "iclip", 6, 10));
        StoreFilter family;
        family.benchmark = "b";
        family.method = "iclip";
        const auto models = load_series(store.path, family, SeriesLabel::model);
        CHECK(models.labels == std::vector<std::string>{"alpha", "beta", "ours-1b", "theirs"});
        CHECK(models.values[1] == 0.6);
    }
}

TEST_CASE("role filter separates base and instruct runs") {
    testutil::TempFile store("roles");
    append_run(store.path, make_record("m-a", -1, "b", "iclip", 2, 10, ModelRole::base));
    append_run(store.path, make_record("m-b", -1, "b", "iclip", 4, 10, ModelRole::base));
    append_run(store.path,
               make_record("m-a", -1, "b", "instruct_0shot", 8, 10, ModelRole::instruct));
    append_run(store.path,
               make_record("m-b", -1, "b", "instruct_0shot", 9, 10, ModelRole::instruct));

    StoreFilter base;
    base.benchmark = "b";
    base.model_role = ModelRole::base;
    const auto base_series = series_from_records(load_store(store.path), base,
                                                 SeriesLabel::model);
    CHECK(base_series.values == std::vector<double>{0.2, 0.4});

    StoreFilter instr;
    instr.benchmark = "b";
    instr.model_role = ModelRole::instruct;
    const auto instr_series = series_from_records(load_store(store.path), instr,
                                                  SeriesLabel::model);
    CHECK(instr_series.values == std::vector<double>{0.8, 0.9});
}

// ---------------------------------------------------------------------------
// reports

TEST_CASE("the improvement report prints the reference AVG row") {
    const auto table = improvement(
        {{"CMath", 0.467}, {"MGSM_zh", 0.467}, {"Gaokao2023EN", 0.467},
         {"CollegeMath", 0.467}, {"Minerva Math", 0.000}, {"Multi_LogiEval", 0.602}},
        {{"CMath", 0.867}, {"MGSM_zh", 0.867}, {"Gaokao2023EN", 0.867},
         {"CollegeMath", 0.733}, {"Minerva Math", 0.600}, {"Multi_LogiEval", 0.733}});

    const auto markdown =
        improvement_report(table, "Benchmark", "Original", "ICLiP", ReportFormat::markdown);
    CHECK(markdown.find("| AVG | 0.412 | 0.778 | 0.366 |") != std::string::npos);
    CHECK(markdown.find("| CMath | 0.467 | 0.867 | 0.400 |") != std::string::npos);

    const auto csv =
        improvement_report(table, "Benchmark", "Original", "ICLiP", ReportFormat::csv);
    CHECK(csv.find("AVG,0.412,0.778,0.366") != std::string::npos);
    CHECK(csv.find("Minerva Math,0.000,0.600,0.600") != std::string::npos);
}

TEST_CASE("average ranks use midranks for ties") {
    // two methods tied on one experiment share rank 1.5
    const std::vector<std::vector<double>> tied{{0.5}, {0.5}, {0.2}, {0.1}};
    CHECK(average_ranks(tied) == std::vector<double>{1.5, 1.5, 3.0, 4.0});

    // a method that wins everywhere averages exactly 1.0
    const std::vector<std::vector<double>> sweep{
        {0.9, 0.8, 0.7}, {0.5, 0.4, 0.3}, {0.4, 0.5, 0.2}, {0.1, 0.2, 0.1}};
    const auto ranks = average_ranks(sweep);
    CHECK(ranks[0] == 1.0);
    // per-experiment ranks always sum to n(n+1)/2, so averages do too
    double total = 0.0;
    for (double r : ranks) total += r;
    CHECK(total == doctest::Approx(10.0).epsilon(1e-12));
    for (double r : ranks) {
        CHECK(r >= 1.0);
        CHECK(r <= 4.0);
    }
}

TEST_CASE("the ablation report bolds winners and appends AVG and rank rows") {
    const std::vector<std::string> methods{"instruct_0shot", "iclip"};
    const std::vector<std::string> benches{"b1", "b2"};
    const std::vector<std::vector<double>> scores{{0.3, 0.2}, {0.8, 0.6}};
    const auto markdown = ablation_report(methods, benches, scores, ReportFormat::markdown);
    CHECK(markdown.find("| b1 | 0.300 | **0.800** |") != std::string::npos);
    CHECK(markdown.find("| AVG | 0.250 | 0.700 |") != std::string::npos);
    CHECK(markdown.find("| AvgRank | 2.00 | **1.00** |") != std::string::npos);

    const auto csv = ablation_report(methods, benches, scores, ReportFormat::csv);
    CHECK(csv.find("b1,0.300,0.800") != std::string::npos);
    CHECK(csv.find("AvgRank,2.00,1.00") != std::string::npos);
}

TEST_CASE("series export is a plain (step,score) csv") {
    ScoreSeries series;
    series.labels = {"100", "200"};
    series.values = {0.125, 0.25};
    CHECK(series_csv(series) == "step,score\n100,0.125000\n200,0.250000\n");
}
