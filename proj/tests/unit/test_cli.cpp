#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "litesem/litesem.hpp"
#include "support/fixtures.hpp"

using namespace litesem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "litesem");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("litesem_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    /// Writes the planted corpus, queries, qrels and a config for it.
    void write_planted() {
        corpus = testkit::make_planted_corpus();
        testkit::write_corpus_jsonl(dir / "corpus.jsonl", corpus.docs);
        testkit::write_queries_jsonl(dir / "queries.jsonl", corpus);
        testkit::write_qrels_tsv(dir / "qrels.tsv", corpus);
        const auto ind = testkit::planted_induction();
        std::ofstream(dir / "cfg.json") << nlohmann::json{{"induction.tau_disp", ind.tau_disp},
                                                          {"induction.min_cluster_size", ind.min_cluster_size},
                                                          {"induction.cluster_tightness", ind.cluster_tightness}}
                                               .dump();
    }

    std::string p(const std::string& name) const { return (dir / name).string(); }

    fs::path dir;
    testkit::PlantedCorpus corpus;
};

} // namespace

TEST_F(CliTest, IndexThreeDocs) {
    std::ofstream(dir / "c.jsonl") << R"({"doc_id": "a", "text": "apple pie with cinnamon"})" << '\n'
                                   << R"({"doc_id": "b", "text": "new laptop chip"})" << '\n'
                                   << R"({"doc_id": "c", "text": "rain and storm tomorrow"})" << '\n';
    const auto r = invoke({"index", "--corpus", p("c.jsonl"), "--out", p("i.bin")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto summary = nlohmann::json::parse(r.out);
    EXPECT_EQ(summary.at("docs"), 3);
    EXPECT_TRUE(fs::exists(dir / "i.bin"));
    EXPECT_TRUE(fs::exists(dir / "i.bin.timing.json"));
    const auto last = r.err.substr(r.err.rfind('\n', r.err.size() - 2) + 1);
    EXPECT_EQ(nlohmann::json::parse(last).at("event"), "induction_stats");

    const auto stats = invoke({"stats", "--index", p("i.bin")});
    ASSERT_EQ(stats.code, cli::kExitOk);
    EXPECT_EQ(nlohmann::json::parse(stats.out).at("chunks"), 3);
}

TEST_F(CliTest, BadJsonLineSevenExitsTwo) {
    {
        std::ofstream out(dir / "c.jsonl");
        for (int i = 1; i <= 6; ++i) {
            out << R"({"doc_id": "d)" << i << R"(", "text": "word"})" << '\n';
        }
        out << "{oops\n";
    }
    const auto r = invoke({"index", "--corpus", p("c.jsonl"), "--out", p("i.bin")});
    EXPECT_EQ(r.code, cli::kExitInput);
    EXPECT_NE(r.err.find("line 7"), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(invoke({}).code, cli::kExitInput);
    EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitInput);
    EXPECT_EQ(invoke({"index", "--corpus", p("missing.jsonl"), "--out", p("i.bin")}).code, cli::kExitInput);
    EXPECT_EQ(invoke({"query", "--index", p("missing.bin"), "--text", "apple"}).code, cli::kExitInput);
    EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, FullPipelineIsDeterministic) {
    write_planted();
    for (const char* tag : {"1", "2"}) {
        const std::string idx = p(std::string("i") + tag + ".bin");
        ASSERT_EQ(invoke({"index", "--corpus", p("corpus.jsonl"), "--out", idx, "--config", p("cfg.json"), "--seed",
                          "42"})
                      .code,
                  cli::kExitOk);
        const auto q = invoke({"query", "--index", idx, "--queries", p("queries.jsonl"), "--out",
                               p(std::string("run") + tag + ".tsv"), "--config", p("cfg.json"), "--seed", "42"});
        ASSERT_EQ(q.code, cli::kExitOk) << q.err;
        EXPECT_EQ(nlohmann::json::parse(q.out).at("queries"), corpus.queries.size());
    }
    EXPECT_EQ(slurp(dir / "i1.bin"), slurp(dir / "i2.bin"));
    const auto logged = invoke({"index", "--corpus", p("corpus.jsonl"), "--out", p("i3.bin"), "--config", p("cfg.json")});
    EXPECT_NE(logged.err.find(R"("event":"token_induction")"), std::string::npos);
    EXPECT_NE(logged.err.find(R"("token":"apple")"), std::string::npos);
    EXPECT_EQ(slurp(dir / "run1.tsv"), slurp(dir / "run2.tsv"));

    const auto run = read_run(dir / "run1.tsv");
    EXPECT_EQ(run.size(), corpus.queries.size());
    for (const auto& [qid, entries] : run) {
        EXPECT_LE(entries.size(), 10U);
    }

    const auto e = invoke({"eval", "--run", p("run1.tsv"), "--qrels", p("qrels.tsv"), "--index", p("i1.bin")});
    ASSERT_EQ(e.code, cli::kExitOk) << e.err;
    const auto metrics = nlohmann::json::parse(e.out);
    EXPECT_EQ(metrics.at("recall_at_10"), 1.0);
    EXPECT_GE(metrics.at("mrr_at_10").get<double>(), 0.9);
    EXPECT_EQ(metrics.at("num_docs"), corpus.docs.size());
    EXPECT_TRUE(metrics.at("ait_s").is_number());
    EXPECT_TRUE(metrics.at("aqt_s").is_number());
}

TEST_F(CliTest, SeedChangesIndex) {
    write_planted();
    ASSERT_EQ(invoke({"index", "--corpus", p("corpus.jsonl"), "--out", p("a.bin"), "--seed", "1"}).code, 0);
    ASSERT_EQ(invoke({"index", "--corpus", p("corpus.jsonl"), "--out", p("b.bin"), "--seed", "2"}).code, 0);
    EXPECT_NE(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
}

TEST_F(CliTest, EmptyQueriesGiveEmptyRun) {
    write_planted();
    ASSERT_EQ(invoke({"index", "--corpus", p("corpus.jsonl"), "--out", p("i.bin")}).code, 0);
    std::ofstream(dir / "none.jsonl").close();
    const auto r = invoke({"query", "--index", p("i.bin"), "--queries", p("none.jsonl"), "--out", p("run.tsv")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "run.tsv"));
    EXPECT_TRUE(slurp(dir / "run.tsv").empty());
    EXPECT_TRUE(nlohmann::json::parse(r.out).at("aqt_s").is_null());
}

TEST_F(CliTest, InlineTextGoesToStdout) {
    write_planted();
    ASSERT_EQ(invoke({"index", "--corpus", p("corpus.jsonl"), "--out", p("i.bin"), "--config", p("cfg.json")}).code, 0);
    const auto r = invoke({"query", "--index", p("i.bin"), "--text", "apple pie baking", "--k", "5"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    std::istringstream in(r.out);
    const auto run = read_run(in);
    ASSERT_EQ(run.at("text").size(), 5U);
    EXPECT_EQ(run.at("text")[0].stage, "cooc");
}

TEST_F(CliTest, EvalMissingJudgmentExitsTwo) {
    std::ofstream(dir / "run.tsv") << "q1\t0\td1\t1\t1.0\tcooc\nq2\t1\td2\t1\t1.0\tcooc\n";
    std::ofstream(dir / "qrels.tsv") << "q1\td1\t1\n";
    const auto r = invoke({"eval", "--run", p("run.tsv"), "--qrels", p("qrels.tsv")});
    EXPECT_EQ(r.code, cli::kExitInput);
    EXPECT_NE(r.err.find("q2"), std::string::npos) << r.err;

    std::ofstream(dir / "qrels.tsv") << "q1\td1\t1\nq2\td2\t1\n";
    const auto ok = invoke({"eval", "--run", p("run.tsv"), "--qrels", p("qrels.tsv")});
    ASSERT_EQ(ok.code, cli::kExitOk) << ok.err;
    EXPECT_EQ(nlohmann::json::parse(ok.out).at("recall_at_10"), 1.0);
    EXPECT_TRUE(nlohmann::json::parse(ok.out).at("ait_s").is_null());
}

TEST_F(CliTest, ProviderFailureExitsThree) {
    std::ofstream(dir / "c.jsonl") << R"({"doc_id": "a", "text": "apple pie"})" << '\n';
    std::ofstream(dir / "http.json") << R"({"provider.url": "http://127.0.0.1:1", "provider.timeout_s": 2})";
    const auto r = invoke({"index", "--corpus", p("c.jsonl"), "--out", p("i.bin"), "--provider", "http", "--config",
                           p("http.json")});
    EXPECT_EQ(r.code, cli::kExitRuntime) << r.err;
}
