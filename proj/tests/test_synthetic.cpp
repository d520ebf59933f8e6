#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace framelens;

TEST_CASE("seed-7 synthetic dataset shape") {
    SynthConfig cfg;  // 6 families x 4 frames, 40 LUs, 600/300/60/120, seed 7
    auto [lex, corpus] = generate_synthetic(cfg);

    CHECK(lex.n_frames() == 24);
    CHECK(lex.relations.size() == 30);  // >= 24: root edges plus member chains
    CHECK(corpus.size() == 1080);

    auto counts = split_counts(corpus);
    CHECK(counts[Split::exemplar] == 600);
    CHECK(counts[Split::train] == 300);
    CHECK(counts[Split::dev] == 60);
    CHECK(counts[Split::test] == 120);
}

TEST_CASE("synthetic generation is byte-deterministic") {
    SynthConfig cfg;
    auto [lex_a, corpus_a] = generate_synthetic(cfg);
    auto [lex_b, corpus_b] = generate_synthetic(cfg);

    CHECK(lexicon_to_json(lex_a).dump() == lexicon_to_json(lex_b).dump());
    REQUIRE(corpus_a.size() == corpus_b.size());
    for (std::size_t i = 0; i < corpus_a.size(); ++i) {
        CHECK(corpus_a[i].tokens == corpus_b[i].tokens);
        CHECK(corpus_a[i].gold == corpus_b[i].gold);
        CHECK(corpus_a[i].target_start == corpus_b[i].target_start);
    }

    cfg.seed = 8;
    auto [lex_c, corpus_c] = generate_synthetic(cfg);
    CHECK(lexicon_to_json(lex_a).dump() != lexicon_to_json(lex_c).dump());
}

TEST_CASE("single-member families have no siblings") {
    SynthConfig cfg;
    cfg.n_families = 3;
    cfg.frames_per_family = 1;
    cfg.lus = 6;
    cfg.instances_per_split = {{Split::train, 20}};
    auto [lex, corpus] = generate_synthetic(cfg);

    CHECK(lex.relations.empty());
    for (std::size_t f = 0; f < lex.n_frames(); ++f)
        CHECK(siblings_of(lex, static_cast<FrameId>(f)).empty());
    CHECK(corpus.size() == 20);
}

TEST_CASE("gold frame always survives lexicon filtering") {
    auto [lex, corpus] = generate_synthetic(SynthConfig{});
    for (const auto& inst : corpus) {
        auto cands = candidates_for(lex, inst.lu);
        REQUIRE(cands.has_value());
        CHECK(std::find(cands->begin(), cands->end(), inst.gold) != cands->end());
    }
}

TEST_CASE("synthetic instances validate against the lexicon") {
    auto [lex, corpus] = generate_synthetic(SynthConfig{});
    for (const auto& inst : corpus) validate_instance(inst, lex, "synthetic");

    // every frame reachable as a gold label in the exemplar split
    std::set<FrameId> exemplar_golds;
    for (const auto& inst : corpus)
        if (inst.split == Split::exemplar) exemplar_golds.insert(inst.gold);
    CHECK(exemplar_golds.size() == lex.n_frames());
}

TEST_CASE("some lexical units cross family boundaries") {
    auto [lex, corpus] = generate_synthetic(SynthConfig{});
    int crossing = 0, ambiguous = 0;
    for (const auto& [key, lu] : lex.lexical_units) {
        if (lu.evoked.size() < 2) continue;
        ++ambiguous;
        std::set<int> families;
        for (FrameId f : lu.evoked) families.insert(f / 4);
        if (families.size() > 1) ++crossing;
    }
    CHECK(ambiguous > 10);
    CHECK(crossing > 0);
}

TEST_CASE("invalid synthetic configs are rejected") {
    SynthConfig cfg;
    cfg.n_families = 1;
    cfg.frames_per_family = 1;
    CHECK_THROWS_AS(generate_synthetic(cfg), UsageError);

    SynthConfig bad;
    bad.lus = 0;
    CHECK_THROWS_AS(generate_synthetic(bad), UsageError);
}
