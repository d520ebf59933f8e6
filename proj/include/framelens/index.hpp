#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelens/encoder.hpp"
#include "framelens/objective.hpp"

namespace framelens {

// Frozen |frames| x d matrix of frame representations with precomputed norms.
struct FrameEmbeddingIndex {
    Mat reps;
    Vec norms;

    std::size_t n_frames() const { return reps.rows; }
};

struct Ranking {
    std::vector<std::pair<FrameId, double>> entries;  // descending score, ties by id
};

inline FrameEmbeddingIndex index_from_matrix(Mat reps, const Lexicon* lex = nullptr) {
    FrameEmbeddingIndex idx;
    idx.reps = std::move(reps);
    idx.norms.resize(idx.reps.rows);
    for (std::size_t f = 0; f < idx.reps.rows; ++f) {
        const double* row = idx.reps.row(f);
        double s = 0.0;
        for (std::size_t j = 0; j < idx.reps.cols; ++j) s += row[j] * row[j];
        idx.norms[f] = std::sqrt(s);
        if (idx.norms[f] == 0.0) {
            std::string name = lex ? lex->frame(static_cast<FrameId>(f)).name : std::to_string(f);
            throw NumericError("frame \"" + name + "\" has a zero-norm representation");
        }
    }
    return idx;
}

inline FrameEmbeddingIndex build_index(const DualModel& model, const Vocab& vocab,
                                       const Lexicon& lex, int threads = 1) {
    Mat reps(lex.n_frames(), model.d);
    if (model.lookup()) {
        if (model.table.rows != lex.n_frames())
            throw DataError("lookup table row count does not match the lexicon");
        reps = model.table;
    } else {
        auto fcache = frame_token_cache(vocab, lex);
        parallel_for(lex.n_frames(), threads, [&](std::size_t f) {
            Vec rep = encode_frame_dual(model, fcache[f]);
            double* row = reps.row(f);
            for (std::size_t j = 0; j < model.d; ++j) row[j] = rep[j];
        });
    }
    return index_from_matrix(std::move(reps), &lex);
}

namespace detail {

inline std::vector<std::pair<FrameId, double>> score_against(const FrameEmbeddingIndex& idx,
                                                             const Vec& t, double tnorm,
                                                             const std::vector<FrameId>& frames) {
    std::vector<std::pair<FrameId, double>> scored;
    scored.reserve(frames.size());
    for (FrameId f : frames) {
        if (f < 0 || static_cast<std::size_t>(f) >= idx.n_frames())
            throw DataError("rank: frame id " + std::to_string(f) + " out of range");
        const double* row = idx.reps.row(static_cast<std::size_t>(f));
        double s = 0.0;
        for (std::size_t j = 0; j < idx.reps.cols; ++j) s += t[j] * row[j];
        double c = s / (tnorm * idx.norms[static_cast<std::size_t>(f)]);
        scored.emplace_back(f, std::clamp(c, -1.0, 1.0));
    }
    return scored;
}

inline bool score_before(const std::pair<FrameId, double>& a, const std::pair<FrameId, double>& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
}

}  // namespace detail

// Exact top-k over every frame: full scan, partial selection sort.
inline Ranking rank_all(const FrameEmbeddingIndex& idx, const Vec& t, std::size_t k) {
    if (norm(t) == 0.0) throw NumericError("rank_all: zero-norm target");
    if (k < 1 || k > idx.n_frames())
        throw UsageError("rank_all: k must lie in [1, " + std::to_string(idx.n_frames()) + "]");
    std::vector<FrameId> all(idx.n_frames());
    for (std::size_t f = 0; f < all.size(); ++f) all[f] = static_cast<FrameId>(f);
    auto scored = detail::score_against(idx, t, norm(t), all);
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), detail::score_before);
    scored.resize(k);
    return Ranking{std::move(scored)};
}

// Full ordering of an explicit candidate set.
inline Ranking rank_candidates(const FrameEmbeddingIndex& idx, const Vec& t,
                               const std::vector<FrameId>& cands) {
    if (cands.empty()) throw DataError("rank_candidates: empty candidate set");
    if (norm(t) == 0.0) throw NumericError("rank_candidates: zero-norm target");
    auto scored = detail::score_against(idx, t, norm(t), cands);
    std::sort(scored.begin(), scored.end(), detail::score_before);
    return Ranking{std::move(scored)};
}

enum class PredictMode { with_lf, without_lf };

inline std::string predict_mode_to_string(PredictMode m) {
    return m == PredictMode::with_lf ? "with_lf" : "without_lf";
}

struct Prediction {
    FrameId frame = -1;
    double score = 0.0;
    bool fallback_used = false;  // with_lf requested but the LU was unknown
    Ranking topk;
};

inline Prediction predict(const DualModel& model, const FrameEmbeddingIndex& idx,
                          const Vocab& vocab, const Lexicon& lex, const Instance& inst,
                          PredictMode mode, std::size_t k = 5) {
    Vec t = encode_target(model, vocab, inst);
    Prediction pred;
    if (mode == PredictMode::with_lf) {
        if (auto cands = candidates_for(lex, inst.lu)) {
            pred.topk = rank_candidates(idx, t, *cands);
            if (pred.topk.entries.size() > k) pred.topk.entries.resize(k);
        } else {
            pred.fallback_used = true;
            pred.topk = rank_all(idx, t, std::min(k, idx.n_frames()));
        }
    } else {
        pred.topk = rank_all(idx, t, std::min(k, idx.n_frames()));
    }
    pred.frame = pred.topk.entries.front().first;
    pred.score = pred.topk.entries.front().second;
    return pred;
}

// Prediction output record (one JSONL line).
inline nlohmann::json prediction_to_json(const Prediction& p, const Lexicon& lex,
                                         std::size_t instance_index, PredictMode mode) {
    nlohmann::json topk = nlohmann::json::array();
    for (const auto& [f, s] : p.topk.entries)
        topk.push_back({{"frame", lex.frame(f).name}, {"score", s}});
    return nlohmann::json{{"instance_index", instance_index},
                          {"mode", predict_mode_to_string(mode)},
                          {"predicted", lex.frame(p.frame).name},
                          {"score", p.score},
                          {"fallback_used", p.fallback_used},
                          {"top_k", topk}};
}

}  // namespace framelens
