#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_helpers.hpp"

using namespace framelens;

namespace {

Mat random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat m(rows, cols);
    for (double& v : m.a) v = -1.0 + 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    return m;
}

Vec random_vec(std::size_t d, std::uint64_t seed) {
    Mat m = random_matrix(1, d, seed);
    return Vec(m.a.begin(), m.a.end());
}

// Independent oracle: score every row with its own cosine loop, stable full
// sort on (score desc, id asc).
std::vector<FrameId> brute_force_order(const Mat& reps, const Vec& t) {
    std::vector<std::pair<double, FrameId>> scored;
    double tn = 0.0;
    for (double v : t) tn += v * v;
    tn = std::sqrt(tn);
    for (std::size_t f = 0; f < reps.rows; ++f) {
        double dot = 0.0, rn = 0.0;
        for (std::size_t j = 0; j < reps.cols; ++j) {
            dot += reps.at(f, j) * t[j];
            rn += reps.at(f, j) * reps.at(f, j);
        }
        scored.emplace_back(dot / (tn * std::sqrt(rn)), static_cast<FrameId>(f));
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<FrameId> order;
    for (const auto& [s, f] : scored) order.push_back(f);
    return order;
}

}  // namespace

TEST_CASE("build_index shapes and determinism") {
    auto [lex, corpus] = generate_synthetic(SynthConfig{});
    Vocab vocab = build_vocab(corpus, lex);
    DualModel model = make_model(vocab.size(), 16, Mode::dual, 4, lex.n_frames());

    FrameEmbeddingIndex idx = build_index(model, vocab, lex);
    CHECK(idx.reps.rows == 24);
    CHECK(idx.reps.cols == 16);

    FrameEmbeddingIndex again = build_index(model, vocab, lex);
    CHECK(idx.reps.a == again.reps.a);

    SECTION("rows match encode_frame") {
        Vec rep = encode_frame(model, vocab, lex, 5);
        const double* row = idx.reps.row(5);
        CHECK(Vec(row, row + 16) == rep);
    }
    SECTION("threaded build is identical") {
        FrameEmbeddingIndex par = build_index(model, vocab, lex, 4);
        CHECK(idx.reps.a == par.reps.a);
    }
    SECTION("lookup mode copies the table verbatim") {
        DualModel lm = make_model(vocab.size(), 16, Mode::lookup_random, 4, lex.n_frames());
        FrameEmbeddingIndex lidx = build_index(lm, vocab, lex);
        CHECK(lidx.reps.a == lm.table.a);
    }
}

TEST_CASE("zero-norm index rows are rejected with the frame name") {
    Lexicon lex = boarding_lexicon();
    Mat reps(3, 4);
    reps.at(0, 0) = 1.0;
    reps.at(2, 1) = 1.0;  // row 1 (Getting) left zero
    CHECK_THROWS_WITH(index_from_matrix(reps, &lex),
                      Catch::Matchers::ContainsSubstring("Getting"));
}

TEST_CASE("rank_all") {
    Mat reps = random_matrix(12, 6, 77);
    FrameEmbeddingIndex idx = index_from_matrix(reps);

    SECTION("a row ranks itself first with score 1") {
        const double* row = reps.row(5);
        Ranking r = rank_all(idx, Vec(row, row + 6), 3);
        CHECK(r.entries[0].first == 5);
        CHECK(r.entries[0].second == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("k equal to the frame count yields a permutation") {
        Ranking r = rank_all(idx, random_vec(6, 9), 12);
        std::set<FrameId> seen;
        for (const auto& [f, s] : r.entries) seen.insert(f);
        CHECK(seen.size() == 12);
    }
    SECTION("bounds") {
        CHECK_THROWS_AS(rank_all(idx, random_vec(6, 9), 0), UsageError);
        CHECK_THROWS_AS(rank_all(idx, random_vec(6, 9), 13), UsageError);
        CHECK_THROWS_AS(rank_all(idx, Vec(6, 0.0), 3), NumericError);
    }
}

TEST_CASE("rank_all matches the brute-force oracle") {
    for (std::uint64_t trial = 0; trial < 25; ++trial) {
        Mat reps = random_matrix(10 + trial % 7, 5, mix64(100, trial));
        if (trial % 3 == 0) {
            // constructed ties: duplicate a row
            std::size_t src = trial % reps.rows;
            std::size_t dst = (trial + 3) % reps.rows;
            if (src != dst)
                for (std::size_t j = 0; j < reps.cols; ++j) reps.at(dst, j) = reps.at(src, j);
        }
        FrameEmbeddingIndex idx = index_from_matrix(reps);
        Vec t = random_vec(5, mix64(200, trial));

        auto expect = brute_force_order(reps, t);
        Ranking r = rank_all(idx, t, reps.rows);
        REQUIRE(r.entries.size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) CHECK(r.entries[i].first == expect[i]);
    }
}

TEST_CASE("duplicated rows order by ascending frame id") {
    Mat reps(4, 3);
    for (std::size_t f = 0; f < 4; ++f) {
        reps.at(f, 0) = 1.0;
        reps.at(f, 1) = 0.5;
    }
    FrameEmbeddingIndex idx = index_from_matrix(reps);
    Ranking r = rank_all(idx, Vec{1.0, 0.5, 0.0}, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.entries[i].first == static_cast<FrameId>(i));
}

TEST_CASE("rank_candidates") {
    Mat reps = random_matrix(9, 4, 31);
    FrameEmbeddingIndex idx = index_from_matrix(reps);
    Vec t = random_vec(4, 8);

    SECTION("singleton set") {
        Ranking r = rank_candidates(idx, t, {7});
        REQUIRE(r.entries.size() == 1);
        CHECK(r.entries[0].first == 7);
    }
    SECTION("all frames equals rank_all") {
        std::vector<FrameId> all;
        for (FrameId f = 0; f < 9; ++f) all.push_back(f);
        Ranking a = rank_candidates(idx, t, all);
        Ranking b = rank_all(idx, t, 9);
        for (std::size_t i = 0; i < 9; ++i) CHECK(a.entries[i].first == b.entries[i].first);
    }
    SECTION("subset ranking preserves the full ranking's relative order") {
        std::vector<FrameId> subset{1, 4, 6, 8};
        Ranking sub = rank_candidates(idx, t, subset);
        auto full = brute_force_order(reps, t);
        std::vector<FrameId> expect;
        for (FrameId f : full)
            if (std::count(subset.begin(), subset.end(), f)) expect.push_back(f);
        for (std::size_t i = 0; i < subset.size(); ++i) CHECK(sub.entries[i].first == expect[i]);
    }
    SECTION("empty candidate set") {
        CHECK_THROWS_AS(rank_candidates(idx, t, {}), DataError);
    }
}

TEST_CASE("definition-initialized table ranks exactly like the dual path") {
    auto [lex, corpus] = generate_synthetic(SynthConfig{});
    Vocab vocab = build_vocab(corpus, lex);
    DualModel model =
        make_model(vocab.size(), 16, Mode::lookup_definition_init, 6, lex.n_frames());
    model = init_table_from_definitions(model, vocab, lex);

    FrameEmbeddingIndex table_idx = build_index(model, vocab, lex);
    Mat dual_reps(lex.n_frames(), 16);
    for (std::size_t f = 0; f < lex.n_frames(); ++f) {
        Vec rep = encode_frame_dual(
            model, tokenize(frame_input_text(lex, static_cast<FrameId>(f)), vocab));
        for (std::size_t j = 0; j < 16; ++j) dual_reps.at(f, j) = rep[j];
    }
    FrameEmbeddingIndex dual_idx = index_from_matrix(std::move(dual_reps), &lex);

    for (std::size_t i = 0; i < 20; ++i) {
        Vec t = encode_target(model, vocab, corpus[i]);
        Ranking a = rank_all(table_idx, t, lex.n_frames());
        Ranking b = rank_all(dual_idx, t, lex.n_frames());
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t k = 0; k < a.entries.size(); ++k) {
            CHECK(a.entries[k].first == b.entries[k].first);
            CHECK(a.entries[k].second == b.entries[k].second);
        }
    }
}

TEST_CASE("predict") {
    Lexicon lex = boarding_lexicon();
    Instance inst = boarding_instance();
    Vocab vocab = build_vocab({inst}, lex);
    DualModel model = make_model(vocab.size(), 8, Mode::dual, 13, lex.n_frames());
    FrameEmbeddingIndex idx = build_index(model, vocab, lex);

    SECTION("with_lf keeps the prediction inside the candidate set") {
        Prediction p = predict(model, idx, vocab, lex, inst, PredictMode::with_lf);
        auto cands = candidates_for(lex, inst.lu);
        CHECK(std::count(cands->begin(), cands->end(), p.frame) == 1);
        CHECK_FALSE(p.fallback_used);
    }
    SECTION("unknown LU falls back to ranking every frame") {
        Instance oov = inst;
        oov.lu = LemmaPos{"warp", Pos::v};
        Prediction with = predict(model, idx, vocab, lex, oov, PredictMode::with_lf);
        Prediction without = predict(model, idx, vocab, lex, oov, PredictMode::without_lf);
        CHECK(with.fallback_used);
        CHECK(with.frame == without.frame);
        CHECK(with.score == without.score);
    }
    SECTION("filtering implication: a w/o-lf hit stays a hit with filtering") {
        Prediction without = predict(model, idx, vocab, lex, inst, PredictMode::without_lf);
        if (without.frame == inst.gold) {
            Prediction with = predict(model, idx, vocab, lex, inst, PredictMode::with_lf);
            CHECK(with.frame == inst.gold);
        }
    }
    SECTION("prediction json record") {
        Prediction p = predict(model, idx, vocab, lex, inst, PredictMode::with_lf, 3);
        nlohmann::json j = prediction_to_json(p, lex, 0, PredictMode::with_lf);
        CHECK(j.contains("predicted"));
        CHECK(j.contains("fallback_used"));
        CHECK(j.at("mode") == "with_lf");
        CHECK(j.at("top_k").size() <= 3);
    }
}
