#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace c2f {

struct Question {
    std::string id;
    std::string text;
};

struct Passage {
    std::string id;
    std::string text;
};

// One question with its candidate passages and binary labels, in file order.
struct CandidateList {
    Question question;
    std::vector<Passage> passages;
    std::vector<int> labels;  // 0/1, aligned with passages
};

struct RankedEntry {
    std::string passage_id;
    double score = 0.0;
    int rank = 0;  // 1-based, consecutive
};

struct RankedQuestion {
    std::string question_id;
    std::vector<RankedEntry> entries;  // rank ascending, score non-increasing
};

using RankedRun = std::vector<RankedQuestion>;

// (qid, pid) -> relevance > 0
using Qrels = std::map<std::string, std::set<std::string>>;

namespace detail {

inline std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

struct LoadResult {
    std::vector<CandidateList> lists;
    int duplicate_warnings = 0;      // duplicate (qid, pid) rows, first kept
    int unmatched_qrel_warnings = 0; // qrels entries naming pids absent from candidates
};

// WikiQA TSV: header row, then QuestionID, Question, DocumentID, DocumentTitle,
// SentenceID, Sentence, Label. Rows are grouped by QuestionID in first-seen
// order; within-question row order is preserved. Questions whose labels are
// all zero are kept.
inline LoadResult load_wikiqa(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open WikiQA file: " + path);
    LoadResult result;
    std::unordered_map<std::string, std::size_t> index_of;
    std::unordered_map<std::string, std::set<std::string>> seen_pids;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("WikiQA file is empty: " + path);
    auto header = detail::split_tsv(detail::strip_cr(line));
    const std::vector<std::string> expected = {"QuestionID", "Question",   "DocumentID",
                                               "DocumentTitle", "SentenceID", "Sentence",
                                               "Label"};
    if (header != expected)
        throw std::runtime_error("WikiQA header mismatch in " + path +
                                 " (expected 7 named columns)");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        if (fields.size() != 7)
            throw std::runtime_error("WikiQA parse error at line " + std::to_string(line_no) +
                                     ": expected 7 columns, got " +
                                     std::to_string(fields.size()));
        const std::string& qid = fields[0];
        const std::string& label_str = fields[6];
        if (label_str != "0" && label_str != "1")
            throw std::runtime_error("WikiQA parse error at line " + std::to_string(line_no) +
                                     ": label must be 0 or 1, got '" + label_str + "'");
        auto it = index_of.find(qid);
        if (it == index_of.end()) {
            it = index_of.emplace(qid, result.lists.size()).first;
            result.lists.push_back(CandidateList{Question{qid, fields[1]}, {}, {}});
        }
        if (!seen_pids[qid].insert(fields[4]).second) {
            ++result.duplicate_warnings;
            continue;
        }
        CandidateList& cl = result.lists[it->second];
        cl.passages.push_back(Passage{fields[4], fields[5]});
        cl.labels.push_back(label_str == "1" ? 1 : 0);
    }
    return result;
}

// qrels rows: qid 0 pid relevance, whitespace separated.
inline Qrels load_qrels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open qrels file: " + path);
    Qrels qrels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, iter, pid;
        long long rel;
        if (!(ss >> qid >> iter >> pid >> rel))
            throw std::runtime_error("qrels parse error at line " + std::to_string(line_no));
        if (rel > 0) qrels[qid].insert(pid);
    }
    return qrels;
}

// MARCO top-1000 rerank format: qid, pid, query text, passage text (no
// header). Labels come from the optional qrels; with no qrels every label is
// zero and the lists are still usable for inference.
inline LoadResult load_marco_candidates(const std::string& path, const Qrels* qrels = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open MARCO candidates file: " + path);
    LoadResult result;
    std::unordered_map<std::string, std::size_t> index_of;
    std::unordered_map<std::string, std::set<std::string>> seen_pids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        if (fields.size() != 4)
            throw std::runtime_error("MARCO parse error at line " + std::to_string(line_no) +
                                     ": expected 4 columns, got " +
                                     std::to_string(fields.size()));
        const std::string& qid = fields[0];
        const std::string& pid = fields[1];
        auto it = index_of.find(qid);
        if (it == index_of.end()) {
            it = index_of.emplace(qid, result.lists.size()).first;
            result.lists.push_back(CandidateList{Question{qid, fields[2]}, {}, {}});
        }
        if (!seen_pids[qid].insert(pid).second) {
            ++result.duplicate_warnings;
            continue;
        }
        CandidateList& cl = result.lists[it->second];
        int label = 0;
        if (qrels) {
            auto q = qrels->find(qid);
            if (q != qrels->end() && q->second.count(pid)) label = 1;
        }
        cl.passages.push_back(Passage{pid, fields[3]});
        cl.labels.push_back(label);
    }
    if (qrels) {
        for (const auto& [qid, pids] : *qrels) {
            auto it = seen_pids.find(qid);
            for (const auto& pid : pids)
                if (it == seen_pids.end() || !it->second.count(pid))
                    ++result.unmatched_qrel_warnings;
        }
    }
    return result;
}

// Run file: one qid<TAB>pid<TAB>rank line per entry, questions in run order,
// ranks ascending within a question. Scores are not serialized.
inline void write_run(const RankedRun& run, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    for (const auto& rq : run)
        for (const auto& e : rq.entries) out << rq.question_id << '\t' << e.passage_id << '\t'
                                             << e.rank << '\n';
    if (!out) throw std::runtime_error("I/O error while writing run file: " + path);
}

inline RankedRun read_run(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open run file: " + path);
    RankedRun run;
    std::unordered_map<std::string, std::size_t> index_of;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        if (fields.size() != 3)
            throw std::runtime_error("run file parse error at line " + std::to_string(line_no));
        auto it = index_of.find(fields[0]);
        if (it == index_of.end()) {
            it = index_of.emplace(fields[0], run.size()).first;
            run.push_back(RankedQuestion{fields[0], {}});
        }
        run[it->second].entries.push_back(RankedEntry{fields[1], 0.0, std::stoi(fields[2])});
    }
    return run;
}

// Build qrels directly from labeled candidate lists (used for WikiQA, whose
// judgments live in the data file rather than a separate qrels file).
inline Qrels qrels_from_lists(const std::vector<CandidateList>& lists) {
    Qrels qrels;
    for (const auto& cl : lists)
        for (std::size_t i = 0; i < cl.passages.size(); ++i)
            if (cl.labels[i] == 1) qrels[cl.question.id].insert(cl.passages[i].id);
    return qrels;
}

}  // namespace c2f
