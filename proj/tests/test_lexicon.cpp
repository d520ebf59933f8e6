#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace framelens;

TEST_CASE("load_lexicon accepts a minimal valid file") {
    TempDir dir;
    nlohmann::json j;
    j["frames"] = {{{"name", "Getting"}, {"definition", "a recipient ends up with a theme"}},
                   {{"name", "Receiving"}, {"definition", "a theme passes to a recipient"}}};
    j["relations"] = {{{"kind", "Inheritance"}, {"sup", "Getting"}, {"sub", "Receiving"}}};
    write_file(dir.file("lexicon.json"), j.dump());

    Lexicon lex = load_lexicon(dir.file("lexicon.json"));
    CHECK(lex.n_frames() == 2);
    CHECK(lex.relations.size() == 1);
    CHECK(lex.id_of("Getting") == 0);
    CHECK(lex.id_of("Receiving") == 1);
}

TEST_CASE("sibling derivation over the Getting family") {
    Lexicon lex = family_lexicon();
    auto names = [&](const std::vector<FrameId>& ids) {
        std::vector<std::string> out;
        for (FrameId f : ids) out.push_back(lex.frame(f).name);
        return out;
    };

    CHECK(names(siblings_of(lex, lex.id_of("Receiving"))) ==
          std::vector<std::string>{"Amassing", "Commerce_buy", "Commerce_collect", "Taking"});
    CHECK(siblings_of(lex, lex.id_of("Borrowing")).empty());  // sole child of Receiving
    CHECK(siblings_of(lex, lex.id_of("Getting")).empty());    // root
    CHECK(names(siblings_of(lex, lex.id_of("Becoming"))) ==
          std::vector<std::string>{"Undergo_change"});
    CHECK_THROWS_AS(siblings_of(lex, 999), DataError);
}

TEST_CASE("lexicon load errors carry entity names") {
    auto base = family_lexicon_json();

    SECTION("self-inheritance") {
        base["relations"].push_back(
            {{"kind", "Inheritance"}, {"sup", "Getting"}, {"sub", "Getting"}});
        CHECK_THROWS_WITH(lexicon_from_json(base),
                          Catch::Matchers::ContainsSubstring("self-inheritance"));
    }
    SECTION("duplicate frame name") {
        base["frames"].push_back({{"name", "Getting"}, {"definition", "again"}});
        CHECK_THROWS_WITH(lexicon_from_json(base),
                          Catch::Matchers::ContainsSubstring("Getting"));
    }
    SECTION("LU referencing unknown frame") {
        base["lexical_units"].push_back(
            {{"lemma", "warp"}, {"pos", "v"}, {"frames", {"NoSuchFrame"}}});
        CHECK_THROWS_WITH(lexicon_from_json(base),
                          Catch::Matchers::ContainsSubstring("NoSuchFrame"));
    }
    SECTION("inheritance cycle") {
        base["relations"].push_back(
            {{"kind", "Inheritance"}, {"sup", "Receiving"}, {"sub", "Getting"}});
        CHECK_THROWS_WITH(lexicon_from_json(base), Catch::Matchers::ContainsSubstring("cycle"));
    }
    SECTION("empty definition") {
        base["frames"].push_back({{"name", "Empty_frame"}, {"definition", ""}});
        CHECK_THROWS_WITH(lexicon_from_json(base),
                          Catch::Matchers::ContainsSubstring("Empty_frame"));
    }
    SECTION("duplicate relation") {
        base["relations"].push_back(
            {{"kind", "Inheritance"}, {"sup", "Getting"}, {"sub", "Receiving"}});
        CHECK_THROWS_WITH(lexicon_from_json(base),
                          Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("duplicate lexical unit") {
        base["lexical_units"].push_back(
            {{"lemma", "get"}, {"pos", "v"}, {"frames", {"Getting"}}});
        CHECK_THROWS_WITH(lexicon_from_json(base), Catch::Matchers::ContainsSubstring("get.v"));
    }
}

TEST_CASE("non-Inheritance relation kinds parse but are ignored") {
    auto j = family_lexicon_json();
    std::size_t before = j["relations"].size();
    j["relations"].push_back({{"kind", "Using"}, {"sup", "Getting"}, {"sub", "Borrowing"}});
    Lexicon lex = lexicon_from_json(j);
    CHECK(lex.relations.size() == before);
}

TEST_CASE("candidates_for") {
    Lexicon lex = boarding_lexicon();

    auto cands = candidates_for(lex, LemmaPos{"get", Pos::v});
    REQUIRE(cands.has_value());
    CHECK(cands->size() == 3);
    CHECK(std::count(cands->begin(), cands->end(), lex.id_of("Board_vehicle")) == 1);

    CHECK_FALSE(candidates_for(lex, LemmaPos{"zzz", Pos::v}).has_value());

    Lexicon fam = family_lexicon();
    auto single = candidates_for(fam, LemmaPos{"borrow", Pos::v});
    REQUIRE(single.has_value());
    CHECK(*single == std::vector<FrameId>{fam.id_of("Borrowing")});

    // every candidate id is a valid frame id
    for (const auto& [key, lu] : fam.lexical_units) {
        auto c = candidates_for(fam, key);
        REQUIRE(c.has_value());
        for (FrameId f : *c) CHECK(static_cast<std::size_t>(f) < fam.n_frames());
    }
}

TEST_CASE("frame_input_text layout") {
    Lexicon lex = boarding_lexicon();
    std::string text = frame_input_text(lex, lex.id_of("Board_vehicle"));
    CHECK(text ==
          "Board_vehicle | a traveller gets onto a vehicle to ride as passenger or driver");

    nlohmann::json j;
    j["frames"] = {{{"name", "Name"}, {"definition", "word"}}};
    Lexicon tiny = lexicon_from_json(j);
    CHECK(frame_input_text(tiny, 0) == "Name | word");
    CHECK_THROWS_AS(frame_input_text(tiny, 7), DataError);
}

TEST_CASE("overlong frame definition rejected at load") {
    nlohmann::json j;
    std::string def;
    for (int i = 0; i < 70; ++i) def += "word ";
    j["frames"] = {{{"name", "Big"}, {"definition", def}}};
    CHECK_THROWS_WITH(lexicon_from_json(j), Catch::Matchers::ContainsSubstring("Big"));
}

TEST_CASE("sibling properties") {
    Lexicon lex = family_lexicon();
    for (std::size_t f = 0; f < lex.n_frames(); ++f) {
        auto sibs = siblings_of(lex, static_cast<FrameId>(f));
        // f never its own sibling, list sorted ascending
        CHECK(std::find(sibs.begin(), sibs.end(), static_cast<FrameId>(f)) == sibs.end());
        CHECK(std::is_sorted(sibs.begin(), sibs.end()));
        // symmetry: g sibling of f implies f sibling of g
        for (FrameId g : sibs) {
            auto back = siblings_of(lex, g);
            CHECK(std::find(back.begin(), back.end(), static_cast<FrameId>(f)) != back.end());
        }
    }
}

TEST_CASE("lexicon save/load round trip is deterministic") {
    TempDir dir;
    Lexicon lex = family_lexicon();
    save_lexicon(lex, dir.file("a.json"));
    Lexicon reloaded = load_lexicon(dir.file("a.json"));

    REQUIRE(reloaded.n_frames() == lex.n_frames());
    for (std::size_t f = 0; f < lex.n_frames(); ++f) {
        CHECK(reloaded.frames[f].name == lex.frames[f].name);
        CHECK(reloaded.sibling_map[f] == lex.sibling_map[f]);
    }
    save_lexicon(reloaded, dir.file("b.json"));
    CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));
}
