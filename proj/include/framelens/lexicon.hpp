#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelens/common.hpp"

namespace framelens {

using FrameId = int;

struct Frame {
    FrameId id = -1;
    std::string name;
    std::string definition;
};

enum class Pos { v, n, a, adv, prep, num, other };

inline std::string pos_to_string(Pos p) {
    switch (p) {
        case Pos::v: return "v";
        case Pos::n: return "n";
        case Pos::a: return "a";
        case Pos::adv: return "adv";
        case Pos::prep: return "prep";
        case Pos::num: return "num";
        case Pos::other: return "other";
    }
    return "other";
}

inline Pos pos_from_string(const std::string& s) {
    if (s == "v") return Pos::v;
    if (s == "n") return Pos::n;
    if (s == "a") return Pos::a;
    if (s == "adv") return Pos::adv;
    if (s == "prep") return Pos::prep;
    if (s == "num") return Pos::num;
    if (s == "other") return Pos::other;
    throw DataError("unknown part-of-speech tag \"" + s + "\"");
}

inline std::string lowercase(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

// lemma.POS key, e.g. "get.v".
struct LemmaPos {
    std::string lemma;
    Pos pos = Pos::v;

    std::string str() const { return lemma + "." + pos_to_string(pos); }
    bool operator==(const LemmaPos& o) const { return lemma == o.lemma && pos == o.pos; }
    bool operator<(const LemmaPos& o) const {
        if (lemma != o.lemma) return lemma < o.lemma;
        return static_cast<int>(pos) < static_cast<int>(o.pos);
    }
};

inline LemmaPos make_lemma_pos(const std::string& lemma, const std::string& pos) {
    if (lemma.empty()) throw DataError("lexical unit with empty lemma");
    return LemmaPos{lowercase(lemma), pos_from_string(pos)};
}

struct LexicalUnit {
    LemmaPos key;
    std::vector<FrameId> evoked;  // sorted ascending, non-empty
};

struct FrameRelation {
    FrameId sup = -1;
    FrameId sub = -1;
};

// Frames, lexical units and Inheritance edges, with the sibling map derived
// at load time. Immutable after construction.
struct Lexicon {
    std::vector<Frame> frames;
    std::map<LemmaPos, LexicalUnit> lexical_units;
    std::vector<FrameRelation> relations;             // Inheritance only
    std::vector<std::vector<FrameId>> sibling_map;    // per frame, ascending ids

    std::size_t n_frames() const { return frames.size(); }

    FrameId id_of(const std::string& name) const {
        auto it = name_to_id_.find(name);
        if (it == name_to_id_.end()) throw DataError("unknown frame \"" + name + "\"");
        return it->second;
    }

    bool has_frame(const std::string& name) const { return name_to_id_.count(name) > 0; }

    const Frame& frame(FrameId f) const {
        if (f < 0 || static_cast<std::size_t>(f) >= frames.size())
            throw DataError("frame id " + std::to_string(f) + " out of range");
        return frames[static_cast<std::size_t>(f)];
    }

    std::unordered_map<std::string, FrameId> name_to_id_;
};

// Candidate frames of a lexical unit; absent (not empty) when the LU is
// unknown, which drives the OOV fallback at inference time.
inline std::optional<std::vector<FrameId>> candidates_for(const Lexicon& lex, const LemmaPos& lu) {
    auto it = lex.lexical_units.find(lu);
    if (it == lex.lexical_units.end()) return std::nullopt;
    return it->second.evoked;
}

inline const std::vector<FrameId>& siblings_of(const Lexicon& lex, FrameId f) {
    if (f < 0 || static_cast<std::size_t>(f) >= lex.sibling_map.size())
        throw DataError("frame id " + std::to_string(f) + " out of range");
    return lex.sibling_map[static_cast<std::size_t>(f)];
}

// Frame encoder input: name, the literal "|" separator, then the definition.
inline std::string frame_input_text(const Lexicon& lex, FrameId f) {
    const Frame& fr = lex.frame(f);
    return fr.name + " | " + fr.definition;
}

namespace detail {

inline std::size_t whitespace_token_count(const std::string& s) {
    std::istringstream iss(s);
    std::string tok;
    std::size_t n = 0;
    while (iss >> tok) ++n;
    return n;
}

inline void derive_siblings(Lexicon& lex) {
    std::size_t nf = lex.frames.size();
    std::vector<std::vector<FrameId>> children(nf);
    for (const auto& r : lex.relations)
        children[static_cast<std::size_t>(r.sup)].push_back(r.sub);

    lex.sibling_map.assign(nf, {});
    std::vector<std::vector<FrameId>> parents(nf);
    for (const auto& r : lex.relations)
        parents[static_cast<std::size_t>(r.sub)].push_back(r.sup);

    for (std::size_t f = 0; f < nf; ++f) {
        std::set<FrameId> sibs;
        for (FrameId p : parents[f])
            for (FrameId c : children[static_cast<std::size_t>(p)])
                if (c != static_cast<FrameId>(f)) sibs.insert(c);
        lex.sibling_map[f].assign(sibs.begin(), sibs.end());
    }
}

inline void check_inheritance_dag(const Lexicon& lex) {
    // Kahn's algorithm over sup -> sub edges.
    std::size_t nf = lex.frames.size();
    std::vector<int> indeg(nf, 0);
    std::vector<std::vector<FrameId>> out(nf);
    for (const auto& r : lex.relations) {
        out[static_cast<std::size_t>(r.sup)].push_back(r.sub);
        ++indeg[static_cast<std::size_t>(r.sub)];
    }
    std::vector<FrameId> queue;
    for (std::size_t f = 0; f < nf; ++f)
        if (indeg[f] == 0) queue.push_back(static_cast<FrameId>(f));
    std::size_t seen = 0;
    while (!queue.empty()) {
        FrameId u = queue.back();
        queue.pop_back();
        ++seen;
        for (FrameId v : out[static_cast<std::size_t>(u)])
            if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    if (seen != nf) {
        for (std::size_t f = 0; f < nf; ++f)
            if (indeg[f] > 0)
                throw DataError("Inheritance cycle involving frame \"" + lex.frames[f].name + "\"");
    }
}

}  // namespace detail

// Longest token sequence either encoder accepts; sentences and frame texts
// are validated against it at load time.
constexpr std::size_t kMaxSequenceLen = 64;

inline Lexicon lexicon_from_json(const nlohmann::json& j) {
    Lexicon lex;
    if (!j.is_object() || !j.contains("frames"))
        throw DataError("lexicon: missing \"frames\" array");

    for (const auto& jf : j.at("frames")) {
        Frame fr;
        fr.id = static_cast<FrameId>(lex.frames.size());
        fr.name = jf.at("name").get<std::string>();
        fr.definition = jf.at("definition").get<std::string>();
        if (fr.name.empty()) throw DataError("frame with empty name");
        if (fr.definition.empty())
            throw DataError("frame \"" + fr.name + "\" has empty definition");
        if (lex.name_to_id_.count(fr.name))
            throw DataError("duplicate frame name \"" + fr.name + "\"");
        // Bounds the position-embedding table (name tokens + "|" + definition).
        std::size_t text_len = detail::whitespace_token_count(fr.name + " | " + fr.definition);
        if (text_len > kMaxSequenceLen)
            throw DataError("frame \"" + fr.name + "\" definition exceeds " +
                            std::to_string(kMaxSequenceLen) + " tokens");
        lex.name_to_id_[fr.name] = fr.id;
        lex.frames.push_back(std::move(fr));
    }
    if (lex.frames.empty()) throw DataError("lexicon: no frames");

    if (j.contains("lexical_units")) {
        for (const auto& ju : j.at("lexical_units")) {
            LexicalUnit lu;
            lu.key = make_lemma_pos(ju.at("lemma").get<std::string>(),
                                    ju.at("pos").get<std::string>());
            std::set<FrameId> evoked;
            for (const auto& jn : ju.at("frames")) {
                const std::string name = jn.get<std::string>();
                if (!lex.has_frame(name))
                    throw DataError("lexical unit " + lu.key.str() +
                                    " references unknown frame \"" + name + "\"");
                evoked.insert(lex.id_of(name));
            }
            if (evoked.empty())
                throw DataError("lexical unit " + lu.key.str() + " evokes no frames");
            lu.evoked.assign(evoked.begin(), evoked.end());
            if (lex.lexical_units.count(lu.key))
                throw DataError("duplicate lexical unit " + lu.key.str());
            lex.lexical_units.emplace(lu.key, std::move(lu));
        }
    }

    std::set<std::pair<FrameId, FrameId>> edge_set;
    if (j.contains("relations")) {
        for (const auto& jr : j.at("relations")) {
            const std::string kind = jr.at("kind").get<std::string>();
            const std::string sup_name = jr.at("sup").get<std::string>();
            const std::string sub_name = jr.at("sub").get<std::string>();
            FrameId sup = lex.id_of(sup_name);
            FrameId sub = lex.id_of(sub_name);
            if (kind != "Inheritance") continue;  // other kinds parse but are ignored
            if (sup == sub)
                throw DataError("self-inheritance on frame \"" + sup_name + "\"");
            if (!edge_set.insert({sup, sub}).second)
                throw DataError("duplicate Inheritance relation " + sup_name + " -> " + sub_name);
            lex.relations.push_back(FrameRelation{sup, sub});
        }
    }

    detail::check_inheritance_dag(lex);
    detail::derive_siblings(lex);
    return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("lexicon parse error in " + path + ": " + e.what());
    }
    try {
        return lexicon_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("lexicon schema error in " + path + ": " + e.what());
    }
}

inline nlohmann::json lexicon_to_json(const Lexicon& lex) {
    nlohmann::json j;
    j["frames"] = nlohmann::json::array();
    for (const auto& f : lex.frames)
        j["frames"].push_back({{"name", f.name}, {"definition", f.definition}});
    j["lexical_units"] = nlohmann::json::array();
    for (const auto& [key, lu] : lex.lexical_units) {
        nlohmann::json names = nlohmann::json::array();
        for (FrameId f : lu.evoked) names.push_back(lex.frame(f).name);
        j["lexical_units"].push_back(
            {{"lemma", key.lemma}, {"pos", pos_to_string(key.pos)}, {"frames", names}});
    }
    j["relations"] = nlohmann::json::array();
    for (const auto& r : lex.relations)
        j["relations"].push_back({{"kind", "Inheritance"},
                                  {"sup", lex.frame(r.sup).name},
                                  {"sub", lex.frame(r.sub).name}});
    return j;
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write lexicon file " + path);
    out << lexicon_to_json(lex).dump(2) << "\n";
}

}  // namespace framelens
