#pragma once

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelens/common.hpp"
#include "framelens/lexicon.hpp"

namespace framelens {

enum class Split { exemplar, train, dev, test };

inline std::string split_to_string(Split s) {
    switch (s) {
        case Split::exemplar: return "exemplar";
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

inline Split split_from_string(const std::string& s) {
    if (s == "exemplar") return Split::exemplar;
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw DataError("unknown split \"" + s + "\"");
}

// One annotated target occurrence.
struct Instance {
    std::vector<std::string> tokens;
    std::size_t target_start = 0;
    std::size_t target_end = 0;  // inclusive
    LemmaPos lu;
    FrameId gold = -1;
    Split split = Split::train;
};

struct TokenIds {
    std::vector<int> ids;
};

// Word-level vocabulary with fixed reserved ids.
class Vocab {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kMask = 2;
    static constexpr int kSep = 3;

    Vocab() {
        for (const char* t : {"<pad>", "<unk>", "<mask>", "|"}) add(t);
    }

    int add(const std::string& tok) {
        auto it = map_.find(tok);
        if (it != map_.end()) return it->second;
        int id = static_cast<int>(tokens_.size());
        map_.emplace(tok, id);
        tokens_.push_back(tok);
        return id;
    }

    int id_of(const std::string& tok) const {
        auto it = map_.find(tok);
        return it == map_.end() ? kUnk : it->second;
    }

    const std::string& token_of(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return tokens_.size(); }

    // Stable digest of the token list; checkpoints store it to catch
    // vocabulary/model mismatches.
    std::string manifest_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& t : tokens_) h = fnv1a64(t + "\n", h);
        return to_hex(h);
    }

  private:
    std::unordered_map<std::string, int> map_;
    std::vector<std::string> tokens_;
};

namespace detail {

// Splits a whitespace-delimited piece into vocabulary units: "|" is the
// separator token, underscores in frame names break into words.
inline void expand_piece(const std::string& piece, std::vector<std::string>& out) {
    if (piece == "|") {
        out.push_back("|");
        return;
    }
    std::string part;
    for (char c : piece) {
        if (c == '_') {
            if (!part.empty()) out.push_back(lowercase(part));
            part.clear();
        } else {
            part += c;
        }
    }
    if (!part.empty()) out.push_back(lowercase(part));
}

inline std::vector<std::string> text_units(const std::string& text) {
    std::istringstream iss(text);
    std::string piece;
    std::vector<std::string> out;
    while (iss >> piece) expand_piece(piece, out);
    return out;
}

}  // namespace detail

// Pre-tokenized sentence path: one id per input token, no re-splitting, so
// target spans stay aligned.
inline TokenIds tokenize(const std::vector<std::string>& tokens, const Vocab& vocab) {
    if (tokens.empty()) throw DataError("tokenize: empty token list");
    TokenIds out;
    out.ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (t == "|") {
            out.ids.push_back(Vocab::kSep);
        } else {
            out.ids.push_back(vocab.id_of(lowercase(t)));
        }
    }
    return out;
}

// Free-text path used for frame name|definition strings.
inline TokenIds tokenize(const std::string& text, const Vocab& vocab) {
    auto units = detail::text_units(text);
    if (units.empty()) throw DataError("tokenize: empty text");
    TokenIds out;
    out.ids.reserve(units.size());
    for (const auto& u : units)
        out.ids.push_back(u == "|" ? Vocab::kSep : vocab.id_of(u));
    return out;
}

inline std::string detokenize(const TokenIds& ids, const Vocab& vocab) {
    std::string out;
    for (std::size_t i = 0; i < ids.ids.size(); ++i) {
        if (i) out += ' ';
        out += vocab.token_of(ids.ids[i]);
    }
    return out;
}

// Reserved tokens, then corpus tokens, then frame-text tokens, each in first
// occurrence order.
inline Vocab build_vocab(const std::vector<Instance>& corpus, const Lexicon& lex) {
    if (corpus.empty()) throw DataError("build_vocab: empty corpus");
    Vocab vocab;
    for (const auto& inst : corpus)
        for (const auto& t : inst.tokens) vocab.add(lowercase(t));
    for (const auto& f : lex.frames)
        for (const auto& u : detail::text_units(frame_input_text(lex, f.id)))
            if (u != "|") vocab.add(u);
    return vocab;
}

inline void validate_instance(const Instance& inst, const Lexicon& lex, const std::string& where) {
    if (inst.tokens.empty()) throw DataError(where + ": empty token list");
    if (inst.tokens.size() > kMaxSequenceLen)
        throw DataError(where + ": sentence longer than " + std::to_string(kMaxSequenceLen) +
                        " tokens");
    if (inst.target_start > inst.target_end || inst.target_end >= inst.tokens.size())
        throw DataError(where + ": target span [" + std::to_string(inst.target_start) + "," +
                        std::to_string(inst.target_end) + "] out of range for " +
                        std::to_string(inst.tokens.size()) + " tokens");
    lex.frame(inst.gold);  // throws on bad id
}

inline std::vector<Instance> load_corpus(const std::string& path, const Lexicon& lex) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file " + path);
    std::vector<Instance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": malformed line: " + e.what());
        }
        try {
            Instance inst;
            inst.tokens = j.at("tokens").get<std::vector<std::string>>();
            inst.target_start = j.at("target_start").get<std::size_t>();
            inst.target_end = j.at("target_end").get<std::size_t>();
            inst.lu = make_lemma_pos(j.at("lemma").get<std::string>(),
                                     j.at("pos").get<std::string>());
            const std::string gold_name = j.at("gold").get<std::string>();
            if (!lex.has_frame(gold_name))
                throw DataError(where + ": unknown gold frame \"" + gold_name + "\"");
            inst.gold = lex.id_of(gold_name);
            inst.split = split_from_string(j.at("split").get<std::string>());
            validate_instance(inst, lex, where);
            out.push_back(std::move(inst));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return out;
}

inline void save_corpus(const std::vector<Instance>& corpus, const Lexicon& lex,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file " + path);
    for (const auto& inst : corpus) {
        nlohmann::json j{{"tokens", inst.tokens},
                         {"target_start", inst.target_start},
                         {"target_end", inst.target_end},
                         {"lemma", inst.lu.lemma},
                         {"pos", pos_to_string(inst.lu.pos)},
                         {"gold", lex.frame(inst.gold).name},
                         {"split", split_to_string(inst.split)}};
        out << j.dump() << "\n";
    }
}

inline std::map<Split, std::size_t> split_counts(const std::vector<Instance>& corpus) {
    std::map<Split, std::size_t> counts;
    for (const auto& inst : corpus) ++counts[inst.split];
    return counts;
}

inline std::vector<Instance> split_slice(const std::vector<Instance>& corpus, Split s) {
    std::vector<Instance> out;
    for (const auto& inst : corpus)
        if (inst.split == s) out.push_back(inst);
    return out;
}

}  // namespace framelens
