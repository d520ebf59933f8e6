#include <catch2/catch_amalgamated.hpp>

#include "framelens/cli.hpp"
#include "test_helpers.hpp"

using namespace framelens;

namespace {

int run_cli(std::vector<std::string> args) { return cli::run(std::move(args)); }

struct SynthWorkspace {
    TempDir dir;

    SynthWorkspace() {
        REQUIRE(run_cli({"synth", "--seed", "7", "--families", "3", "--frames-per-family", "3",
                         "--lus", "15", "--exemplars", "60", "--train-instances", "30",
                         "--dev-instances", "10", "--test-instances", "20", "--out",
                         dir.str()}) == 0);
    }
    std::string lexicon() const { return dir.file("lexicon.json"); }
    std::string corpus() const { return dir.file("corpus.jsonl"); }
};

}  // namespace

TEST_CASE("synth writes lexicon and corpus files") {
    SynthWorkspace ws;
    CHECK(std::filesystem::exists(ws.lexicon()));
    CHECK(std::filesystem::exists(ws.corpus()));

    Lexicon lex = load_lexicon(ws.lexicon());
    CHECK(lex.n_frames() == 9);
    auto corpus = load_corpus(ws.corpus(), lex);
    CHECK(corpus.size() == 120);

    SECTION("rerunning with the same seed reproduces the files byte for byte") {
        TempDir other;
        REQUIRE(run_cli({"synth", "--seed", "7", "--families", "3", "--frames-per-family", "3",
                         "--lus", "15", "--exemplars", "60", "--train-instances", "30",
                         "--dev-instances", "10", "--test-instances", "20", "--out",
                         other.str()}) == 0);
        CHECK(read_file(ws.lexicon()) == read_file(other.file("lexicon.json")));
        CHECK(read_file(ws.corpus()) == read_file(other.file("corpus.jsonl")));
    }
}

TEST_CASE("validate accepts generator output") {
    SynthWorkspace ws;
    CHECK(run_cli({"validate", "--lexicon", ws.lexicon(), "--corpus", ws.corpus()}) == 0);
}

TEST_CASE("cli exit codes") {
    SECTION("usage errors exit 1") {
        CHECK(run_cli({"no-such-command"}) == 1);
        CHECK(run_cli({"validate"}) == 1);  // missing required flags
    }
    SECTION("data errors exit 2") {
        CHECK(run_cli({"validate", "--lexicon", "/nonexistent.json", "--corpus",
                       "/nonexistent.jsonl"}) == 2);
    }
    SECTION("help exits 0") {
        CHECK(run_cli({"--help"}) == 0);
    }
}

TEST_CASE("train, eval, predict, analyze round trip") {
    SynthWorkspace ws;
    TempDir out;

    // tiny config to keep the test fast
    nlohmann::json config;
    config["d"] = 16;
    config["stage1"] = {{"epochs", 4}, {"batch_size", 16}};
    config["stage2"] = {{"epochs", 2}, {"batch_size", 4}, {"candidate_n", 5}};
    write_file(out.file("config.json"), config.dump());

    REQUIRE(run_cli({"train", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(), "--config",
                     out.file("config.json"), "--seed", "3", "--out", out.str()}) == 0);
    CHECK(std::filesystem::exists(out.file("checkpoint_stage1.json")));
    CHECK(std::filesystem::exists(out.file("checkpoint_stage2.json")));
    CHECK(std::filesystem::exists(out.file("train_report.json")));

    SECTION("eval writes a report with the metric columns") {
        REQUIRE(run_cli({"eval", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--split", "test",
                         "--mode", "both", "--masked", "--centroid", "5", "--out",
                         out.file("report.json")}) == 0);
        nlohmann::json report = nlohmann::json::parse(read_file(out.file("report.json")));
        CHECK(report.at("results").contains("acc_with_lf"));
        CHECK(report.at("results").contains("r_at_1"));
        CHECK(report.at("results").contains("r_at_3"));
        CHECK(report.at("results").contains("r_at_5"));
        CHECK(report.at("results").contains("overall"));
        CHECK(report.contains("masked"));
        CHECK(report.contains("centroid"));
    }
    SECTION("eval reruns identically") {
        REQUIRE(run_cli({"eval", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--out",
                         out.file("r1.json")}) == 0);
        REQUIRE(run_cli({"eval", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--out",
                         out.file("r2.json")}) == 0);
        CHECK(read_file(out.file("r1.json")) == read_file(out.file("r2.json")));
    }
    SECTION("predict over a corpus writes one line per instance") {
        REQUIRE(run_cli({"predict", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--out",
                         out.file("pred.jsonl")}) == 0);
        std::istringstream lines(read_file(out.file("pred.jsonl")));
        std::string line;
        std::size_t n = 0;
        while (std::getline(lines, line)) {
            auto j = nlohmann::json::parse(line);
            CHECK(j.contains("predicted"));
            CHECK(j.contains("top_k"));
            ++n;
        }
        CHECK(n == 120);
    }
    SECTION("predict a single sentence") {
        Lexicon lex = load_lexicon(ws.lexicon());
        const auto& lu = lex.lexical_units.begin()->second;
        REQUIRE(run_cli({"predict", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--sentence",
                         "they " + lu.key.lemma + " it", "--span", "1", "1", "--lu",
                         lu.key.str(), "--out", out.file("one.jsonl")}) == 0);
        auto j = nlohmann::json::parse(read_file(out.file("one.jsonl")));
        CHECK(j.contains("predicted"));
    }
    SECTION("analyze writes the structural report and csv") {
        REQUIRE(run_cli({"analyze", "--lexicon", ws.lexicon(), "--corpus", ws.corpus(),
                         "--checkpoint", out.file("checkpoint_stage2.json"), "--out",
                         out.file("structural.json"), "--csv", out.file("pairs.csv")}) == 0);
        auto report = nlohmann::json::parse(read_file(out.file("structural.json")));
        CHECK(report.at("results").contains("avg_ratio"));
        CHECK(report.at("results").at("pairs").size() == 9);  // 3 families x 3 frames
        CHECK(read_file(out.file("pairs.csv")).rfind("sup,sub,", 0) == 0);
    }
    SECTION("checkpoint against the wrong corpus is refused") {
        TempDir other;
        REQUIRE(run_cli({"synth", "--seed", "8", "--families", "3", "--frames-per-family", "3",
                         "--lus", "15", "--exemplars", "60", "--train-instances", "30",
                         "--dev-instances", "10", "--test-instances", "20", "--out",
                         other.str()}) == 0);
        CHECK(run_cli({"eval", "--lexicon", other.file("lexicon.json"), "--corpus",
                       other.file("corpus.jsonl"), "--checkpoint",
                       out.file("checkpoint_stage2.json")}) == 2);
    }
}

TEST_CASE("gradcheck subcommand passes at the documented tolerance") {
    CHECK(run_cli({"gradcheck", "--seed", "1", "--configs", "2"}) == 0);
}
