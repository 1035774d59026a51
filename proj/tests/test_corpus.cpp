#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "c2f/corpus.hpp"

using namespace c2f;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

const char* kWikiHeader =
    "QuestionID\tQuestion\tDocumentID\tDocumentTitle\tSentenceID\tSentence\tLabel\n";

}  // namespace

TEST_CASE("wikiqa loader groups rows by question preserving order", "[corpus]") {
    std::string path = write_temp("c2f_wikiqa_ok.tsv",
                                  std::string(kWikiHeader) +
                                      "Q1\twhat is x\tD1\tX\tD1-0\tfirst sentence\t0\n"
                                      "Q1\twhat is x\tD1\tX\tD1-1\tsecond sentence\t1\n"
                                      "Q1\twhat is x\tD1\tX\tD1-2\tthird sentence\t0\n"
                                      "Q2\twho is y\tD2\tY\tD2-0\tanswer here\t1\n"
                                      "Q2\twho is y\tD2\tY\tD2-1\tnot here\t0\n");
    auto result = load_wikiqa(path);
    REQUIRE(result.lists.size() == 2);
    REQUIRE(result.lists[0].question.id == "Q1");
    REQUIRE(result.lists[0].passages.size() == 3);
    REQUIRE(result.lists[0].labels == std::vector<int>{0, 1, 0});
    REQUIRE(result.lists[0].passages[2].id == "D1-2");
    REQUIRE(result.lists[1].question.id == "Q2");
    REQUIRE(result.lists[1].passages.size() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("wikiqa keeps questions whose labels are all zero", "[corpus]") {
    std::string path = write_temp("c2f_wikiqa_zero.tsv",
                                  std::string(kWikiHeader) +
                                      "Q1\tq\tD1\tX\tD1-0\ts1\t0\n"
                                      "Q1\tq\tD1\tX\tD1-1\ts2\t0\n");
    auto result = load_wikiqa(path);
    REQUIRE(result.lists.size() == 1);
    REQUIRE(result.lists[0].labels == std::vector<int>{0, 0});
    std::filesystem::remove(path);
}

TEST_CASE("wikiqa reports malformed rows with their line number", "[corpus]") {
    std::string path = write_temp("c2f_wikiqa_bad.tsv",
                                  std::string(kWikiHeader) +
                                      "Q1\tq\tD1\tX\tD1-0\ts1\t0\n"
                                      "Q1\tq\tD1\tX\ts2\t1\n");
    REQUIRE_THROWS_WITH(load_wikiqa(path), Catch::Matchers::ContainsSubstring("line 3"));
    std::filesystem::remove(path);
}

TEST_CASE("wikiqa rejects labels outside {0,1}", "[corpus]") {
    std::string path = write_temp("c2f_wikiqa_badlabel.tsv",
                                  std::string(kWikiHeader) + "Q1\tq\tD1\tX\tD1-0\ts1\t2\n");
    REQUIRE_THROWS_WITH(load_wikiqa(path), Catch::Matchers::ContainsSubstring("label"));
    std::filesystem::remove(path);
}

TEST_CASE("marco loader joins qrels for labels", "[corpus]") {
    std::string cand = write_temp("c2f_marco_cand.tsv",
                                  "7\tp1\tsome query\tfirst passage\n"
                                  "7\tp2\tsome query\tsecond passage\n"
                                  "7\tp3\tsome query\tthird passage\n"
                                  "7\tp4\tsome query\tfourth passage\n");
    std::string qrels_path = write_temp("c2f_marco_qrels.txt", "7 0 p2 1\n");
    Qrels qrels = load_qrels(qrels_path);
    auto result = load_marco_candidates(cand, &qrels);
    REQUIRE(result.lists.size() == 1);
    REQUIRE(result.lists[0].labels == std::vector<int>{0, 1, 0, 0});
    REQUIRE(result.unmatched_qrel_warnings == 0);
    std::filesystem::remove(cand);
    std::filesystem::remove(qrels_path);
}

TEST_CASE("marco loader without qrels yields all-zero labels", "[corpus]") {
    std::string cand = write_temp("c2f_marco_noqrels.tsv",
                                  "9\tp1\tq\tone\n"
                                  "9\tp2\tq\ttwo\n");
    auto result = load_marco_candidates(cand);
    REQUIRE(result.lists.size() == 1);
    REQUIRE(result.lists[0].labels == std::vector<int>{0, 0});
    std::filesystem::remove(cand);
}

TEST_CASE("marco loader keeps first duplicate and counts a warning", "[corpus]") {
    std::string cand = write_temp("c2f_marco_dup.tsv",
                                  "9\tp1\tq\tfirst\n"
                                  "9\tp1\tq\tduplicate\n"
                                  "9\tp2\tq\tsecond\n");
    auto result = load_marco_candidates(cand);
    REQUIRE(result.duplicate_warnings == 1);
    REQUIRE(result.lists[0].passages.size() == 2);
    REQUIRE(result.lists[0].passages[0].text == "first");
    std::filesystem::remove(cand);
}

TEST_CASE("qrels referencing unknown pids are counted, not fatal", "[corpus]") {
    std::string cand = write_temp("c2f_marco_unmatched.tsv", "9\tp1\tq\tone\n");
    std::string qrels_path = write_temp("c2f_marco_unmatched_qrels.txt",
                                        "9 0 p1 1\n"
                                        "9 0 ghost 1\n");
    Qrels qrels = load_qrels(qrels_path);
    auto result = load_marco_candidates(cand, &qrels);
    REQUIRE(result.unmatched_qrel_warnings == 1);
    REQUIRE(result.lists[0].labels == std::vector<int>{1});
    std::filesystem::remove(cand);
    std::filesystem::remove(qrels_path);
}

TEST_CASE("marco loader rejects short rows", "[corpus]") {
    std::string cand = write_temp("c2f_marco_short.tsv", "9\tp1\tq\n");
    REQUIRE_THROWS_WITH(load_marco_candidates(cand),
                        Catch::Matchers::ContainsSubstring("line 1"));
    std::filesystem::remove(cand);
}

TEST_CASE("write_run emits qid pid rank lines with trailing newline", "[corpus]") {
    RankedRun run;
    run.push_back(RankedQuestion{"Q1",
                                 {RankedEntry{"a", 0.9, 1}, RankedEntry{"b", 0.5, 2},
                                  RankedEntry{"c", 0.1, 3}}});
    auto path = (std::filesystem::temp_directory_path() / "c2f_run_out.tsv").string();
    write_run(run, path);
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(content == "Q1\ta\t1\nQ1\tb\t2\nQ1\tc\t3\n");
    std::filesystem::remove(path);
}

TEST_CASE("write_run of an empty run produces an empty file", "[corpus]") {
    auto path = (std::filesystem::temp_directory_path() / "c2f_run_empty.tsv").string();
    write_run(RankedRun{}, path);
    REQUIRE(std::filesystem::file_size(path) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("run files round-trip", "[corpus]") {
    std::mt19937_64 rng(11);
    RankedRun run;
    std::uniform_int_distribution<int> n_entries(1, 12);
    for (int q = 0; q < 20; ++q) {
        RankedQuestion rq;
        rq.question_id = "Q" + std::to_string(q);
        int n = n_entries(rng);
        for (int r = 1; r <= n; ++r)
            rq.entries.push_back(RankedEntry{"p" + std::to_string(rng() % 1000) +
                                                 "_" + std::to_string(r),
                                             0.0, r});
        run.push_back(std::move(rq));
    }
    auto path = (std::filesystem::temp_directory_path() / "c2f_run_rt.tsv").string();
    write_run(run, path);
    RankedRun back = read_run(path);
    REQUIRE(back.size() == run.size());
    for (std::size_t q = 0; q < run.size(); ++q) {
        REQUIRE(back[q].question_id == run[q].question_id);
        REQUIRE(back[q].entries.size() == run[q].entries.size());
        for (std::size_t i = 0; i < run[q].entries.size(); ++i) {
            REQUIRE(back[q].entries[i].passage_id == run[q].entries[i].passage_id);
            REQUIRE(back[q].entries[i].rank == run[q].entries[i].rank);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("grouping preserves within-question row order on random files", "[corpus]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::string content = kWikiHeader;
        // Line-by-line oracle of expected grouping.
        std::vector<std::string> qids;
        std::map<std::string, std::vector<std::string>> expected;
        std::uniform_int_distribution<int> n_q(1, 5), n_rows(1, 6);
        int q_count = n_q(rng);
        int sid = 0;
        for (int q = 0; q < q_count; ++q) {
            std::string qid = "Q" + std::to_string(q);
            int rows = n_rows(rng);
            for (int r = 0; r < rows; ++r) {
                std::string pid = "S" + std::to_string(sid++);
                content += qid + "\tq text\tD\tT\t" + pid + "\tsentence\t" +
                           (rng() % 2 ? "1" : "0") + "\n";
                if (expected.find(qid) == expected.end()) qids.push_back(qid);
                expected[qid].push_back(pid);
            }
        }
        std::string path = write_temp("c2f_wikiqa_prop.tsv", content);
        auto result = load_wikiqa(path);
        REQUIRE(result.lists.size() == qids.size());
        for (std::size_t q = 0; q < qids.size(); ++q) {
            REQUIRE(result.lists[q].question.id == qids[q]);
            std::vector<std::string> got;
            for (const auto& p : result.lists[q].passages) got.push_back(p.id);
            REQUIRE(got == expected[qids[q]]);
        }
        std::filesystem::remove(path);
    }
}
