#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oat/dataset.hpp"
#include "oat/rng.hpp"

using namespace oat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "oat_dataset_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Small but splittable: every student needs >= max(min_interactions, gates).
SplitConfig small_split() {
    SplitConfig cfg;
    cfg.seed = 7;
    cfg.max_test_length = 5;
    cfg.min_test = 2;
    cfg.min_interactions = 40;
    cfg.pretrain_fraction = 0.5;
    return cfg;
}

std::string csv_of(const Dataset& ds) {
    std::ostringstream os;
    for (const auto& [sid, split] : ds.splits) {
        for (const auto& it : split.train) os << sid << 't' << it.question_id << it.correct;
        for (const auto& it : split.candidate) os << sid << 'c' << it.question_id << it.correct;
        for (const auto& it : split.test) os << sid << 'e' << it.question_id << it.correct;
    }
    return os.str();
}

}  // namespace

TEST_CASE("duplicate (student, question) pair is rejected with the pair named") {
    const auto dir = temp_dir();
    write_file(dir / "qm.csv", "1,0\n0,1\n1,1\n");
    write_file(dir / "dup.csv", "student_id,question_id,correct\n0,0,1\n0,1,0\n0,0,1\n");
    try {
        load_dataset((dir / "dup.csv").string(), (dir / "qm.csv").string(), SplitConfig{});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("duplicate") != std::string::npos);
        CHECK(msg.find("(0, 0)") != std::string::npos);
        CHECK(msg.find(":4:") != std::string::npos);  // line number of the bad row
    }
}

TEST_CASE("malformed rows report the line number") {
    const auto dir = temp_dir();
    write_file(dir / "qm.csv", "1\n1\n");
    write_file(dir / "bad.csv", "student_id,question_id,correct\n0,zero,1\n");
    CHECK_THROWS_WITH_AS(
        load_dataset((dir / "bad.csv").string(), (dir / "qm.csv").string(), SplitConfig{}),
        doctest::Contains(":2:"), DataError);

    write_file(dir / "orphan.csv", "student_id,question_id,correct\n0,9,1\n");
    CHECK_THROWS_WITH_AS(
        load_dataset((dir / "orphan.csv").string(), (dir / "qm.csv").string(), SplitConfig{}),
        doctest::Contains("not in q-matrix"), DataError);
}

TEST_CASE("q-matrix validation: empty rows and non-binary entries") {
    const auto dir = temp_dir();
    write_file(dir / "inter_ok.csv", "student_id,question_id,correct\n0,0,1\n");

    write_file(dir / "qm_zero.csv", "1,0\n0,0\n");
    CHECK_THROWS_WITH_AS(load_dataset((dir / "inter_ok.csv").string(),
                                      (dir / "qm_zero.csv").string(), SplitConfig{}),
                         doctest::Contains("tags no concept"), DataError);

    write_file(dir / "qm_two.csv", "1,2\n");
    CHECK_THROWS_WITH_AS(load_dataset((dir / "inter_ok.csv").string(),
                                      (dir / "qm_two.csv").string(), SplitConfig{}),
                         doctest::Contains("0 or 1"), DataError);
}

TEST_CASE("ratio arithmetic: 100 interactions at 0.2/0.6/0.2 split 20/60/20") {
    std::vector<Interaction> rows;
    QMatrix qm;
    qm.n_questions = 120;
    qm.n_concepts = 1;
    qm.entries.assign(120, 1);
    // Two students so one lands in pretrain, one in evaluation.
    for (int sid = 0; sid < 2; ++sid) {
        for (int q = 0; q < 100; ++q) rows.push_back({sid, q, (q + sid) % 2});
    }
    const Dataset ds = assemble_dataset(rows, qm, small_split());
    REQUIRE(ds.splits.size() == 1);
    const auto& split = ds.splits.begin()->second;
    CHECK(split.train.size() == 20);
    CHECK(split.candidate.size() == 60);
    CHECK(split.test.size() == 20);
}

TEST_CASE("split question-id sets are pairwise disjoint") {
    const auto [ds, truth] = synthesize_dataset(SynthSpec{30, 80, 4, 60}, 99, small_split());
    (void)truth;
    for (const auto& [sid, split] : ds.splits) {
        std::set<int> train_q, cand_q, test_q;
        for (const auto& it : split.train) train_q.insert(it.question_id);
        for (const auto& it : split.candidate) cand_q.insert(it.question_id);
        for (const auto& it : split.test) test_q.insert(it.question_id);
        CHECK(train_q.size() + cand_q.size() + test_q.size() ==
              split.train.size() + split.candidate.size() + split.test.size());
        for (int q : train_q) {
            CHECK(cand_q.count(q) == 0);
            CHECK(test_q.count(q) == 0);
        }
        for (int q : cand_q) CHECK(test_q.count(q) == 0);
    }
}

TEST_CASE("same file and seed load to byte-identical splits") {
    const auto dir = temp_dir();
    {
        const SynthRaw raw = synthesize_raw(SynthSpec{20, 70, 3, 60}, 5);
        write_interactions_csv(raw.interactions, (dir / "inter.csv").string());
        write_qmatrix_csv(raw.q_matrix, (dir / "qm2.csv").string());
    }
    const SplitConfig cfg = small_split();
    const Dataset a = load_dataset((dir / "inter.csv").string(), (dir / "qm2.csv").string(), cfg);
    const Dataset b = load_dataset((dir / "inter.csv").string(), (dir / "qm2.csv").string(), cfg);
    CHECK(a.pretrain_students == b.pretrain_students);
    CHECK(a.eval_students == b.eval_students);
    CHECK(csv_of(a) == csv_of(b));
}

TEST_CASE("pretrain and evaluation students are disjoint") {
    const auto [ds, truth] = synthesize_dataset(SynthSpec{40, 80, 4, 60}, 3, small_split());
    (void)truth;
    std::set<int> pre(ds.pretrain_students.begin(), ds.pretrain_students.end());
    for (int sid : ds.eval_students) CHECK(pre.count(sid) == 0);
    CHECK(!ds.pretrain_students.empty());
    CHECK(!ds.eval_students.empty());
}

TEST_CASE("synthesis determinism: same spec and seed give identical datasets") {
    const SynthSpec spec{25, 70, 4, 55};
    const auto [a, ta] = synthesize_dataset(spec, 13, small_split());
    const auto [b, tb] = synthesize_dataset(spec, 13, small_split());
    CHECK(csv_of(a) == csv_of(b));
    CHECK(ta.theta_star == tb.theta_star);
    CHECK(ta.alpha_star == tb.alpha_star);
    const auto [c, tc] = synthesize_dataset(spec, 14, small_split());
    (void)tc;
    CHECK(csv_of(a) != csv_of(c));
}

TEST_CASE("synthetic responses follow the response model") {
    // Empirical mean correctness tracks the mean model probability.
    const SynthSpec spec{200, 300, 8, 150};
    const SynthRaw raw = synthesize_raw(spec, 13);
    double correct = 0.0;
    for (const auto& it : raw.interactions) correct += it.correct;
    const double empirical = correct / raw.interactions.size();
    CHECK(std::fabs(empirical - raw.truth.mean_model_prob) < 0.02);

    // Law of large numbers per cell: fix one model probability and draw 1e4
    // Bernoulli responses through the same path the synthesizer uses.
    const double p = 1.0 / (1.0 + std::exp(-0.73));
    Rng rng(21);
    int hits = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(p) ? 1 : 0;
    CHECK(std::fabs(static_cast<double>(hits) / n - p) < 0.02);
}

TEST_CASE("synthesis rejects impossible interaction counts") {
    CHECK_THROWS_AS(synthesize_raw(SynthSpec{5, 10, 2, 11}, 1), ConfigError);
}

TEST_CASE("split config validation and defaults") {
    SplitConfig cfg;
    cfg.train_ratio = 0.5;  // ratios no longer sum to 1
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const SplitConfig ok;
    CHECK(ok.effective_min_interactions() == std::max(50, 4 * 20 + 5));
}

TEST_CASE("students below the minimum are dropped and counted") {
    std::vector<Interaction> rows;
    QMatrix qm;
    qm.n_questions = 60;
    qm.n_concepts = 1;
    qm.entries.assign(60, 1);
    for (int sid = 0; sid < 4; ++sid) {
        const int n = sid < 2 ? 50 : 10;  // students 2 and 3 under the minimum
        for (int q = 0; q < n; ++q) rows.push_back({sid, q, 1});
    }
    const Dataset ds = assemble_dataset(rows, qm, small_split());
    CHECK(ds.load_report.students_seen == 4);
    CHECK(ds.load_report.dropped_min_interactions == 2);
}
