#pragma once

#include <array>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "framelens/corpus.hpp"
#include "framelens/lexicon.hpp"

namespace framelens {

struct SynthConfig {
    int n_families = 6;
    int frames_per_family = 4;
    int lus = 40;
    std::map<Split, std::size_t> instances_per_split = {
        {Split::exemplar, 600}, {Split::train, 300}, {Split::dev, 60}, {Split::test, 120}};
    std::uint64_t seed = 7;
};

namespace detail {

inline std::string synth_word(std::size_t i) {
    static const char* syl[20] = {"ba",  "re",  "mo",  "ti",  "lu",  "ken", "dor",
                                  "fi",  "sa",  "vel", "gor", "nim", "pla", "ru",
                                  "ze",  "kal", "mi",  "tor", "bel", "sha"};
    std::string w = std::string(syl[i % 20]) + syl[(i / 20) % 20];
    if (i >= 400) w += syl[(i / 400) % 20];
    return w;
}

inline std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

}  // namespace detail

// Deterministic desk-scale dataset. Frames form one Inheritance family per
// root; each lexical unit evokes 1-4 frames with a distinct surface form per
// (LU, frame) pair, so the gold frame is recoverable from the target span.
// A slice of ambiguous pairs is excluded from the exemplar split, giving the
// train split genuinely new material for the second training stage.
inline std::pair<Lexicon, std::vector<Instance>> generate_synthetic(const SynthConfig& cfg) {
    if (cfg.n_families < 1 || cfg.frames_per_family < 1)
        throw UsageError("generate_synthetic: family counts must be positive");
    if (cfg.n_families * cfg.frames_per_family < 2)
        throw UsageError("generate_synthetic: need at least 2 frames");
    if (cfg.lus < 1) throw UsageError("generate_synthetic: need at least 1 lexical unit");

    const int n_fam = cfg.n_families;
    const int fam_size = cfg.frames_per_family;
    const int n_frames = n_fam * fam_size;
    const int n_lus = cfg.lus;

    std::mt19937_64 rng(cfg.seed);

    // Disjoint word pools via one global counter.
    std::size_t wc = 0;
    std::vector<std::string> family_word(static_cast<std::size_t>(n_fam));
    for (auto& w : family_word) w = detail::synth_word(wc++);
    std::vector<std::string> member_word(static_cast<std::size_t>(n_frames));
    for (auto& w : member_word) w = detail::synth_word(wc++);
    std::vector<std::array<std::string, 2>> sig_word(static_cast<std::size_t>(n_frames));
    for (auto& s : sig_word) {
        s[0] = detail::synth_word(wc++);
        s[1] = detail::synth_word(wc++);
    }
    std::vector<std::string> stem(static_cast<std::size_t>(n_lus));
    for (auto& w : stem) w = detail::synth_word(wc++);

    static const std::vector<std::string> fillers = {
        "the", "a",  "on",   "with", "near", "they", "it",  "was", "quite", "very",
        "then", "some", "and", "to",  "of",   "in",   "at",  "one", "two",   "all"};

    nlohmann::json jlex;
    jlex["frames"] = nlohmann::json::array();
    for (int f = 0; f < n_frames; ++f) {
        int fam = f / fam_size;
        std::string name = detail::capitalize(family_word[static_cast<std::size_t>(fam)]) + "_" +
                           member_word[static_cast<std::size_t>(f)];
        std::string def = "a " + member_word[static_cast<std::size_t>(f)] + " act of " +
                          family_word[static_cast<std::size_t>(fam)] + " " +
                          family_word[static_cast<std::size_t>(fam)] + " involving " +
                          sig_word[static_cast<std::size_t>(f)][0] + " and " +
                          sig_word[static_cast<std::size_t>(f)][1];
        jlex["frames"].push_back({{"name", name}, {"definition", def}});
    }

    // Per family: root -> every member, plus a chain between consecutive
    // members (multi-parent DAG).
    jlex["relations"] = nlohmann::json::array();
    auto frame_name = [&](int f) { return jlex["frames"][static_cast<std::size_t>(f)]["name"]; };
    for (int fam = 0; fam < n_fam; ++fam) {
        int root = fam * fam_size;
        for (int j = 1; j < fam_size; ++j)
            jlex["relations"].push_back(
                {{"kind", "Inheritance"}, {"sup", frame_name(root)}, {"sub", frame_name(root + j)}});
        for (int j = 2; j < fam_size; ++j)
            jlex["relations"].push_back({{"kind", "Inheritance"},
                                         {"sup", frame_name(root + j - 1)},
                                         {"sub", frame_name(root + j)}});
    }

    // Lexical units. Rank-0 frame is l % n_frames so every frame is covered
    // when lus >= n_frames; later ranks mix same-family and cross-family
    // frames.
    static const Pos pos_cycle[8] = {Pos::v, Pos::v, Pos::n, Pos::v,
                                     Pos::a, Pos::n, Pos::v, Pos::adv};
    struct LuPair {
        int frame;
        std::string surface;
        bool heldout;  // excluded from the exemplar split
    };
    std::vector<std::vector<LuPair>> lu_pairs(static_cast<std::size_t>(n_lus));
    static const char* suffix[4] = {"", "an", "el", "im"};

    jlex["lexical_units"] = nlohmann::json::array();
    for (int l = 0; l < n_lus; ++l) {
        bool mono = (l % 5 == 4);
        std::size_t want = mono ? 1 : 2 + rng() % 3;
        if (want > static_cast<std::size_t>(n_frames)) want = static_cast<std::size_t>(n_frames);

        std::set<int> evoked{l % n_frames};
        int fam0 = (l % n_frames) / fam_size;
        for (int guard = 0; evoked.size() < want && guard < 200; ++guard) {
            int f = (rng() % 2 == 0) ? fam0 * fam_size + static_cast<int>(rng() % fam_size)
                                     : static_cast<int>(rng() % n_frames);
            evoked.insert(f);
        }

        auto& pairs = lu_pairs[static_cast<std::size_t>(l)];
        std::size_t rank = 0;
        for (int f : evoked) {
            bool heldout = !mono && rank + 1 == evoked.size() && l % 4 == 1;
            pairs.push_back({f, stem[static_cast<std::size_t>(l)] + suffix[rank % 4], heldout});
            ++rank;
        }

        nlohmann::json names = nlohmann::json::array();
        for (int f : evoked) names.push_back(frame_name(f));
        jlex["lexical_units"].push_back({{"lemma", stem[static_cast<std::size_t>(l)]},
                                         {"pos", pos_to_string(pos_cycle[l % 8])},
                                         {"frames", names}});
    }

    Lexicon lex = lexicon_from_json(jlex);

    auto make_instance = [&](int l, std::size_t rank, Split split) {
        const LuPair& pr = lu_pairs[static_cast<std::size_t>(l)][rank];
        int f = pr.frame;
        int fam = f / fam_size;
        std::size_t span_len = (rng() % 10 == 0) ? 2 : 1;
        std::size_t n = 6 + rng() % 7;
        std::size_t p = 1 + rng() % (n - span_len);

        Instance inst;
        inst.tokens.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t r = rng() % 10;
            if (r < 5)
                inst.tokens[i] = fillers[rng() % fillers.size()];
            else if (r < 8)
                inst.tokens[i] = sig_word[static_cast<std::size_t>(f)][rng() % 2];
            else
                inst.tokens[i] = family_word[static_cast<std::size_t>(fam)];
        }
        inst.tokens[p] = pr.surface;
        if (span_len == 2) inst.tokens[p + 1] = sig_word[static_cast<std::size_t>(f)][0];
        inst.target_start = p;
        inst.target_end = p + span_len - 1;
        inst.lu = LemmaPos{stem[static_cast<std::size_t>(l)], pos_cycle[l % 8]};
        inst.gold = f;
        inst.split = split;
        return inst;
    };

    // Coverage pass first (every visible pair for exemplars, every pair for
    // train), then random draws up to the configured counts.
    std::vector<std::pair<int, std::size_t>> all_pairs, visible_pairs;
    for (int l = 0; l < n_lus; ++l)
        for (std::size_t r = 0; r < lu_pairs[static_cast<std::size_t>(l)].size(); ++r) {
            all_pairs.emplace_back(l, r);
            if (!lu_pairs[static_cast<std::size_t>(l)][r].heldout) visible_pairs.emplace_back(l, r);
        }

    std::vector<Instance> corpus;
    for (Split split : {Split::exemplar, Split::train, Split::dev, Split::test}) {
        auto it = cfg.instances_per_split.find(split);
        std::size_t count = it == cfg.instances_per_split.end() ? 0 : it->second;
        bool exemplar = split == Split::exemplar;
        const auto& coverage =
            exemplar ? visible_pairs : (split == Split::train ? all_pairs : std::vector<std::pair<int, std::size_t>>{});
        for (std::size_t i = 0; i < count; ++i) {
            int l;
            std::size_t rank;
            if (i < coverage.size()) {
                std::tie(l, rank) = coverage[i];
            } else {
                l = static_cast<int>(rng() % static_cast<std::uint64_t>(n_lus));
                const auto& pairs = lu_pairs[static_cast<std::size_t>(l)];
                std::vector<std::size_t> eligible;
                for (std::size_t r = 0; r < pairs.size(); ++r)
                    if (!exemplar || !pairs[r].heldout) eligible.push_back(r);
                rank = eligible[rng() % eligible.size()];
            }
            corpus.push_back(make_instance(l, rank, split));
        }
    }

    return {std::move(lex), std::move(corpus)};
}

}  // namespace framelens
