#include "oat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "oat/kernels.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

// Stream tags keep the derived rng streams of unrelated stages apart.
constexpr std::uint64_t kPerStudentSplitStream = 101;
constexpr std::uint64_t kPartitionStream = 102;
constexpr std::uint64_t kSynthThetaStream = 103;
constexpr std::uint64_t kSynthAlphaStream = 104;
constexpr std::uint64_t kSynthQMatrixStream = 105;
constexpr std::uint64_t kSynthStudentStream = 106;
constexpr std::uint64_t kSynthSplitStream = 107;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string location(const std::string& path, int line) {
    return path + ":" + std::to_string(line) + ": ";
}

// Splits a CSV line on ','. No quoting: the formats here are pure integer
// tables.
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

int parse_int(const std::string& field, const std::string& where) {
    int value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw DataError(where + "expected integer, got '" + field + "'");
    }
    return value;
}

std::string read_line(std::istream& in, bool& ok) {
    std::string line;
    ok = static_cast<bool>(std::getline(in, line));
    if (ok && !line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

int SplitConfig::effective_min_interactions() const {
    if (min_interactions > 0) return min_interactions;
    return std::max(50, 4 * max_test_length + min_test);
}

void SplitConfig::validate() const {
    const double sum = train_ratio + candidate_ratio + test_ratio;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
    }
    if (train_ratio < 0 || candidate_ratio <= 0 || test_ratio <= 0) {
        throw ConfigError("candidate and test ratios must be positive");
    }
    if (max_test_length < 1) throw ConfigError("max_test_length must be >= 1");
    if (min_test < 1) throw ConfigError("min_test must be >= 1");
    if (pretrain_fraction < 0.0 || pretrain_fraction >= 1.0) {
        throw ConfigError("pretrain_fraction must be in [0, 1)");
    }
}

QMatrix load_qmatrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open q-matrix file: " + path);

    QMatrix q;
    int line_no = 0;
    bool ok = true;
    while (true) {
        const std::string line = read_line(in, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (q.n_concepts == 0) {
            q.n_concepts = static_cast<int>(fields.size());
        } else if (static_cast<int>(fields.size()) != q.n_concepts) {
            throw DataError(location(path, line_no) + "expected " +
                            std::to_string(q.n_concepts) + " fields, got " +
                            std::to_string(fields.size()));
        }
        int row_sum = 0;
        for (const auto& f : fields) {
            const int v = parse_int(f, location(path, line_no));
            if (v != 0 && v != 1) {
                throw DataError(location(path, line_no) + "q-matrix entries must be 0 or 1");
            }
            q.entries.push_back(static_cast<std::uint8_t>(v));
            row_sum += v;
        }
        if (row_sum == 0) {
            throw DataError(location(path, line_no) + "question tags no concept");
        }
        ++q.n_questions;
    }
    if (q.n_questions == 0) throw DataError("q-matrix file is empty: " + path);
    return q;
}

Dataset load_dataset(const std::string& interactions_path, const std::string& qmatrix_path,
                     const SplitConfig& config) {
    config.validate();
    QMatrix q = load_qmatrix(qmatrix_path);

    std::ifstream in(interactions_path);
    if (!in) throw DataError("cannot open interactions file: " + interactions_path);

    bool ok = true;
    const std::string header = read_line(in, ok);
    if (!ok || header != "student_id,question_id,correct") {
        throw DataError(location(interactions_path, 1) +
                        "expected header 'student_id,question_id,correct'");
    }

    std::vector<Interaction> interactions;
    std::unordered_set<std::int64_t> seen_pairs;
    int line_no = 1;
    while (true) {
        const std::string line = read_line(in, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        const std::string where = location(interactions_path, line_no);
        if (fields.size() != 3) {
            throw DataError(where + "expected 3 fields, got " + std::to_string(fields.size()));
        }
        Interaction it;
        it.student_id = parse_int(fields[0], where);
        it.question_id = parse_int(fields[1], where);
        it.correct = parse_int(fields[2], where);
        if (it.student_id < 0) throw DataError(where + "negative student id");
        if (it.question_id < 0 || it.question_id >= q.n_questions) {
            throw DataError(where + "question id " + std::to_string(it.question_id) +
                            " not in q-matrix (0.." + std::to_string(q.n_questions - 1) + ")");
        }
        if (it.correct != 0 && it.correct != 1) {
            throw DataError(where + "correct must be 0 or 1");
        }
        const std::int64_t key =
            static_cast<std::int64_t>(it.student_id) * q.n_questions + it.question_id;
        if (!seen_pairs.insert(key).second) {
            throw DataError(where + "duplicate (student, question) pair (" +
                            std::to_string(it.student_id) + ", " +
                            std::to_string(it.question_id) + ")");
        }
        interactions.push_back(it);
    }
    if (interactions.empty()) {
        throw DataError("interactions file has no data rows: " + interactions_path);
    }
    return assemble_dataset(std::move(interactions), std::move(q), config);
}

Dataset assemble_dataset(std::vector<Interaction> interactions, QMatrix q_matrix,
                         const SplitConfig& config) {
    config.validate();

    Dataset ds;
    ds.n_questions = q_matrix.n_questions;
    ds.n_concepts = q_matrix.n_concepts;
    ds.q_matrix = std::move(q_matrix);

    std::map<int, std::vector<Interaction>> by_student;
    int max_student = -1;
    for (const auto& it : interactions) {
        by_student[it.student_id].push_back(it);
        max_student = std::max(max_student, it.student_id);
    }
    ds.n_students = max_student + 1;
    ds.load_report.students_seen = static_cast<int>(by_student.size());

    const int min_n = config.effective_min_interactions();
    std::vector<int> kept;
    for (const auto& [sid, rows] : by_student) {
        if (static_cast<int>(rows.size()) >= min_n) {
            kept.push_back(sid);
        } else {
            ++ds.load_report.dropped_min_interactions;
        }
    }
    if (kept.empty()) throw DataError("empty dataset after filtering: no student meets minimum");

    // Disjoint pretrain / evaluation partition, seeded.
    std::vector<int> order = kept;
    Rng part_rng(mix_seed(config.seed, kPartitionStream));
    part_rng.shuffle(order);
    const int n_pre = static_cast<int>(config.pretrain_fraction * order.size());
    ds.pretrain_students.assign(order.begin(), order.begin() + n_pre);
    std::vector<int> eval_candidates(order.begin() + n_pre, order.end());
    std::sort(ds.pretrain_students.begin(), ds.pretrain_students.end());
    std::sort(eval_candidates.begin(), eval_candidates.end());

    for (int sid : ds.pretrain_students) {
        const auto& rows = by_student[sid];
        ds.pretrain_interactions.insert(ds.pretrain_interactions.end(), rows.begin(), rows.end());
    }

    const auto by_question = [](const Interaction& a, const Interaction& b) {
        return a.question_id < b.question_id;
    };

    // The init-population slicing needs a candidate pool strictly larger
    // than 4L for the largest configured L.
    const int min_candidate = 4 * config.max_test_length + 1;
    for (int sid : eval_candidates) {
        std::vector<Interaction> rows = by_student[sid];
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(sid), kPerStudentSplitStream));
        rng.shuffle(rows);
        const int n = static_cast<int>(rows.size());
        const int n_train = static_cast<int>(config.train_ratio * n);
        const int n_cand = static_cast<int>(config.candidate_ratio * n);
        const int n_test = n - n_train - n_cand;
        if (n_cand < min_candidate || n_test < config.min_test) {
            ++ds.load_report.dropped_split_minima;
            continue;
        }
        StudentSplit split;
        split.train.assign(rows.begin(), rows.begin() + n_train);
        split.candidate.assign(rows.begin() + n_train, rows.begin() + n_train + n_cand);
        split.test.assign(rows.begin() + n_train + n_cand, rows.end());
        std::sort(split.train.begin(), split.train.end(), by_question);
        std::sort(split.candidate.begin(), split.candidate.end(), by_question);
        std::sort(split.test.begin(), split.test.end(), by_question);
        ds.eval_students.push_back(sid);
        ds.splits.emplace(sid, std::move(split));
    }

    ds.load_report.pretrain_students = static_cast<int>(ds.pretrain_students.size());
    ds.load_report.eval_students = static_cast<int>(ds.eval_students.size());
    if (ds.eval_students.empty()) {
        throw DataError("empty dataset after filtering: no evaluable students");
    }
    return ds;
}

SynthRaw synthesize_raw(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n_students < 1 || spec.n_questions < 1 || spec.n_concepts < 1) {
        throw ConfigError("synthetic spec dimensions must be positive");
    }
    if (spec.interactions_per_student > spec.n_questions) {
        throw ConfigError("interactions_per_student exceeds question count");
    }

    SynthRaw raw;
    const int d = spec.n_concepts;
    raw.truth.dim = d;
    raw.truth.theta_star.resize(static_cast<std::size_t>(spec.n_students) * d);
    raw.truth.alpha_star.resize(static_cast<std::size_t>(spec.n_questions) * d);

    Rng theta_rng(mix_seed(seed, kSynthThetaStream));
    for (auto& v : raw.truth.theta_star) v = theta_rng.normal();
    Rng alpha_rng(mix_seed(seed, kSynthAlphaStream));
    for (auto& v : raw.truth.alpha_star) v = alpha_rng.normal();

    // Q-matrix: each question tags 1..3 concepts. The diagnosis model only
    // consumes K, but the file format carries the full incidence matrix.
    raw.q_matrix.n_questions = spec.n_questions;
    raw.q_matrix.n_concepts = d;
    raw.q_matrix.entries.assign(static_cast<std::size_t>(spec.n_questions) * d, 0);
    Rng q_rng(mix_seed(seed, kSynthQMatrixStream));
    std::vector<int> concepts(d);
    for (int c = 0; c < d; ++c) concepts[c] = c;
    for (int qid = 0; qid < spec.n_questions; ++qid) {
        const int n_tags = 1 + static_cast<int>(q_rng.bounded(std::min(3, d)));
        for (int tag : q_rng.sample(concepts, n_tags)) {
            raw.q_matrix.entries[static_cast<std::size_t>(qid) * d + tag] = 1;
        }
    }

    std::vector<int> all_questions(spec.n_questions);
    for (int qid = 0; qid < spec.n_questions; ++qid) all_questions[qid] = qid;

    double prob_sum = 0.0;
    for (int sid = 0; sid < spec.n_students; ++sid) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(sid), kSynthStudentStream));
        const auto qids = rng.sample(all_questions, spec.interactions_per_student);
        const double* theta = raw.truth.theta_row(sid);
        for (int qid : qids) {
            const double p =
                sigmoid(kernels::scalar::dot(theta, raw.truth.alpha_row(qid), d));
            prob_sum += p;
            raw.interactions.push_back({sid, qid, rng.bernoulli(p) ? 1 : 0});
        }
    }
    raw.truth.mean_model_prob = prob_sum / raw.interactions.size();
    return raw;
}

std::pair<Dataset, GroundTruth> synthesize_dataset(const SynthSpec& spec, std::uint64_t seed,
                                                   SplitConfig config) {
    SynthRaw raw = synthesize_raw(spec, seed);
    // The single seed argument drives splitting too, so one value pins the
    // whole dataset.
    config.seed = mix_seed(seed, kSynthSplitStream);
    Dataset ds = assemble_dataset(std::move(raw.interactions), std::move(raw.q_matrix), config);
    return {std::move(ds), std::move(raw.truth)};
}

void write_interactions_csv(const std::vector<Interaction>& interactions,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "student_id,question_id,correct\n";
    for (const auto& it : interactions) {
        out << it.student_id << ',' << it.question_id << ',' << it.correct << '\n';
    }
}

void write_qmatrix_csv(const QMatrix& q, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (int row = 0; row < q.n_questions; ++row) {
        for (int c = 0; c < q.n_concepts; ++c) {
            if (c) out << ',';
            out << static_cast<int>(q.at(row, c));
        }
        out << '\n';
    }
}

}  // namespace oat
