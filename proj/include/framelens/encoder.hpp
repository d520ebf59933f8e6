#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "framelens/corpus.hpp"
#include "framelens/lexicon.hpp"
#include "framelens/linalg.hpp"

namespace framelens {

// Learnable tensors of one encoder: token embeddings, learned positions, one
// affine projection with tanh. h_i = tanh(W (E[id_i] + P[i]) + b).
struct EncoderParams {
    Mat E;  // |vocab| x d
    Mat P;  // kMaxSequenceLen x d
    Mat W;  // d x d
    Mat b;  // 1 x d

    std::size_t d() const { return W.cols; }
};

enum class Mode { dual, lookup_random, lookup_definition_init };

inline std::string mode_to_string(Mode m) {
    switch (m) {
        case Mode::dual: return "dual";
        case Mode::lookup_random: return "lookup_random";
        case Mode::lookup_definition_init: return "lookup_definition_init";
    }
    return "dual";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "dual") return Mode::dual;
    if (s == "lookup_random") return Mode::lookup_random;
    if (s == "lookup_definition_init") return Mode::lookup_definition_init;
    throw DataError("unknown model mode \"" + s + "\"");
}

// Two independent encoders plus an optional per-frame lookup table standing
// in for the frame encoder in the baseline modes.
struct DualModel {
    std::size_t d = 0;
    Mode mode = Mode::dual;
    EncoderParams target;
    EncoderParams frame;
    Mat table;  // |frames| x d, lookup modes only

    bool lookup() const { return mode != Mode::dual; }
};

namespace detail {

// Portable uniform(-0.1, 0.1): top 53 bits of the engine output.
inline double uniform_init(std::mt19937_64& rng) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return -0.1 + 0.2 * u;
}

inline void fill_uniform(Mat& m, std::mt19937_64& rng) {
    for (double& v : m.a) v = uniform_init(rng);
}

}  // namespace detail

inline EncoderParams init_params(std::size_t vocab_size, std::size_t d, std::uint64_t seed) {
    if (d < 2) throw UsageError("encoder dimension must be >= 2");
    if (vocab_size == 0) throw UsageError("empty vocabulary");
    std::mt19937_64 rng(seed);
    EncoderParams p;
    p.E = Mat(vocab_size, d);
    p.P = Mat(kMaxSequenceLen, d);
    p.W = Mat(d, d);
    p.b = Mat(1, d);
    detail::fill_uniform(p.E, rng);
    detail::fill_uniform(p.P, rng);
    detail::fill_uniform(p.W, rng);
    detail::fill_uniform(p.b, rng);
    return p;
}

inline DualModel make_model(std::size_t vocab_size, std::size_t d, Mode mode, std::uint64_t seed,
                            std::size_t n_frames = 0) {
    DualModel m;
    m.d = d;
    m.mode = mode;
    m.target = init_params(vocab_size, d, mix64(seed, 1));
    m.frame = init_params(vocab_size, d, mix64(seed, 2));
    if (mode != Mode::dual) {
        if (n_frames == 0) throw UsageError("lookup mode requires the frame count");
        m.table = Mat(n_frames, d);
        std::mt19937_64 rng(mix64(seed, 3));
        detail::fill_uniform(m.table, rng);
    }
    return m;
}

// Eq-style forward pass; x rows are kept for the backward pass.
struct EncodeTrace {
    Mat x;  // n x d, E[id_i] + P[i]
    Mat h;  // n x d, tanh(W x_i + b)
};

inline EncodeTrace encode_tokens_trace(const EncoderParams& p, const TokenIds& ids) {
    const std::size_t n = ids.ids.size();
    const std::size_t d = p.d();
    if (n == 0) throw DataError("encode_tokens: empty sequence");
    if (n > kMaxSequenceLen)
        throw DataError("encode_tokens: sequence too long (" + std::to_string(n) + " > " +
                        std::to_string(kMaxSequenceLen) + ")");
    EncodeTrace tr;
    tr.x = Mat(n, d);
    tr.h = Mat(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        int id = ids.ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= p.E.rows)
            throw DataError("encode_tokens: token id " + std::to_string(id) + " out of range");
        const double* e = p.E.row(static_cast<std::size_t>(id));
        const double* pos = p.P.row(i);
        double* x = tr.x.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = e[j] + pos[j];
        double* h = tr.h.row(i);
        for (std::size_t r = 0; r < d; ++r) {
            const double* w = p.W.row(r);
            double z = p.b.at(0, r);
            for (std::size_t c = 0; c < d; ++c) z += w[c] * x[c];
            h[r] = std::tanh(z);
        }
    }
    return tr;
}

inline Mat encode_tokens(const EncoderParams& p, const TokenIds& ids) {
    return encode_tokens_trace(p, ids).h;
}

// Element-wise max over the span; ties go to the lowest row so the
// subgradient routing is deterministic.
inline Vec target_rep_argmax(const Mat& h, std::size_t t_s, std::size_t t_e,
                             std::vector<std::size_t>* argmax_rows = nullptr) {
    if (t_s > t_e || t_e >= h.rows)
        throw DataError("target span [" + std::to_string(t_s) + "," + std::to_string(t_e) +
                        "] out of range");
    Vec out(h.cols);
    if (argmax_rows) argmax_rows->assign(h.cols, t_s);
    for (std::size_t j = 0; j < h.cols; ++j) {
        double best = h.at(t_s, j);
        std::size_t best_row = t_s;
        for (std::size_t i = t_s + 1; i <= t_e; ++i) {
            if (h.at(i, j) > best) {
                best = h.at(i, j);
                best_row = i;
            }
        }
        out[j] = best;
        if (argmax_rows) (*argmax_rows)[j] = best_row;
    }
    return out;
}

inline Vec target_rep(const Mat& h, std::size_t t_s, std::size_t t_e) {
    return target_rep_argmax(h, t_s, t_e);
}

inline Vec frame_rep(const Mat& h) {
    if (h.rows == 0) throw DataError("frame_rep: empty matrix");
    Vec out(h.cols, 0.0);
    for (std::size_t i = 0; i < h.rows; ++i) {
        const double* row = h.row(i);
        for (std::size_t j = 0; j < h.cols; ++j) out[j] += row[j];
    }
    for (double& v : out) v /= static_cast<double>(h.rows);
    return out;
}

inline Vec encode_target(const DualModel& m, const Vocab& vocab, const Instance& inst) {
    TokenIds ids = tokenize(inst.tokens, vocab);
    Mat h = encode_tokens(m.target, ids);
    return target_rep(h, inst.target_start, inst.target_end);
}

// Probe variant: every span token id replaced by the mask id before Eqs. 1-2
// are recomputed.
inline Vec encode_target_masked(const DualModel& m, const Vocab& vocab, const Instance& inst) {
    TokenIds ids = tokenize(inst.tokens, vocab);
    for (std::size_t i = inst.target_start; i <= inst.target_end; ++i)
        ids.ids[i] = Vocab::kMask;
    Mat h = encode_tokens(m.target, ids);
    return target_rep(h, inst.target_start, inst.target_end);
}

// Token ids of every frame's "name | definition" input, computed once.
inline std::vector<TokenIds> frame_token_cache(const Vocab& vocab, const Lexicon& lex) {
    std::vector<TokenIds> cache;
    cache.reserve(lex.n_frames());
    for (const auto& f : lex.frames) cache.push_back(tokenize(frame_input_text(lex, f.id), vocab));
    return cache;
}

inline Vec encode_frame_dual(const DualModel& m, const TokenIds& ids) {
    return frame_rep(encode_tokens(m.frame, ids));
}

inline Vec encode_frame(const DualModel& m, const Vocab& vocab, const Lexicon& lex, FrameId f) {
    const Frame& fr = lex.frame(f);
    Vec rep;
    if (m.lookup()) {
        if (static_cast<std::size_t>(f) >= m.table.rows)
            throw DataError("lookup table has no row for frame \"" + fr.name + "\"");
        const double* row = m.table.row(static_cast<std::size_t>(f));
        rep.assign(row, row + m.table.cols);
    } else {
        rep = encode_frame_dual(m, tokenize(frame_input_text(lex, f), vocab));
    }
    if (norm(rep) == 0.0)
        throw NumericError("frame \"" + fr.name + "\" has a zero-norm representation");
    return rep;
}

// Fills the lookup table from the frozen frame encoder (Fig-2(b) style
// baseline); idempotent.
inline DualModel init_table_from_definitions(const DualModel& m, const Vocab& vocab,
                                             const Lexicon& lex) {
    if (m.mode != Mode::lookup_definition_init)
        throw UsageError("init_table_from_definitions requires lookup_definition_init mode");
    DualModel out = m;
    out.table = Mat(lex.n_frames(), m.d);
    for (const auto& fr : lex.frames) {
        Vec rep = encode_frame_dual(m, tokenize(frame_input_text(lex, fr.id), vocab));
        if (norm(rep) == 0.0)
            throw NumericError("frame \"" + fr.name + "\" has a zero-norm definition encoding");
        double* row = out.table.row(static_cast<std::size_t>(fr.id));
        for (std::size_t j = 0; j < m.d; ++j) row[j] = rep[j];
    }
    return out;
}

}  // namespace framelens
