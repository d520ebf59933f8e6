#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelens/index.hpp"

namespace framelens {

// Fractions in [0,1]; reports scale to percentages for display.
struct EvalResult {
    double acc_with_lf = 0.0;
    std::map<int, double> r_at;  // k in {1,3,5}
    double overall = 0.0;
    double acc_ambiguous = 0.0;
    std::size_t n_instances = 0;
    std::size_t n_ambiguous = 0;
    std::size_t n_fallback = 0;
};

inline double recall_at_k(const std::vector<Ranking>& rankings, const std::vector<FrameId>& golds,
                          std::size_t k) {
    if (rankings.size() != golds.size())
        throw UsageError("recall_at_k: rankings/golds length mismatch");
    if (rankings.empty()) throw UsageError("recall_at_k: empty input");
    if (k < 1) throw UsageError("recall_at_k: k must be >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        const auto& e = rankings[i].entries;
        std::size_t kk = std::min(k, e.size());
        for (std::size_t j = 0; j < kk; ++j) {
            if (e[j].first == golds[i]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

// Harmonic mean of accuracy (with filtering) and R@1 (without); scale
// invariant, so it works on fractions and percentages alike.
inline double overall(double acc, double r1) {
    if (acc < 0.0 || r1 < 0.0) throw UsageError("overall: negative argument");
    if (acc + r1 == 0.0) throw NumericError("overall: both arguments are zero");
    return 2.0 * acc * r1 / (acc + r1);
}

namespace detail {

struct PerInstanceEval {
    bool correct_lf = false;
    bool ambiguous = false;
    bool fallback = false;
    std::size_t gold_rank = 0;  // 1-based position in the w/o-lf top-5, 0 if absent
};

inline EvalResult aggregate(const std::vector<PerInstanceEval>& rows) {
    EvalResult res;
    res.n_instances = rows.size();
    std::size_t correct = 0, amb = 0, amb_correct = 0, fallback = 0;
    std::map<int, std::size_t> hits{{1, 0}, {3, 0}, {5, 0}};
    for (const auto& r : rows) {
        if (r.correct_lf) ++correct;
        if (r.ambiguous) {
            ++amb;
            if (r.correct_lf) ++amb_correct;
        }
        if (r.fallback) ++fallback;
        for (auto& [k, h] : hits)
            if (r.gold_rank >= 1 && r.gold_rank <= static_cast<std::size_t>(k)) ++h;
    }
    double n = static_cast<double>(rows.size());
    res.acc_with_lf = static_cast<double>(correct) / n;
    for (auto& [k, h] : hits) res.r_at[k] = static_cast<double>(h) / n;
    res.acc_ambiguous = amb ? static_cast<double>(amb_correct) / static_cast<double>(amb) : 0.0;
    res.n_ambiguous = amb;
    res.n_fallback = fallback;
    double r1 = res.r_at[1];
    res.overall = (res.acc_with_lf + r1 > 0.0) ? overall(res.acc_with_lf, r1) : 0.0;
    return res;
}

inline PerInstanceEval eval_one(const DualModel& model, const FrameEmbeddingIndex& idx,
                                const Vocab& vocab, const Lexicon& lex, const Instance& inst,
                                bool masked) {
    PerInstanceEval row;
    Vec t = masked ? encode_target_masked(model, vocab, inst) : encode_target(model, vocab, inst);

    auto cands = candidates_for(lex, inst.lu);
    if (cands) {
        row.ambiguous = cands->size() >= 2;
        Ranking r = rank_candidates(idx, t, *cands);
        row.correct_lf = r.entries.front().first == inst.gold;
    } else {
        row.fallback = true;
        Ranking r = rank_all(idx, t, 1);
        row.correct_lf = r.entries.front().first == inst.gold;
    }

    std::size_t k = std::min<std::size_t>(5, idx.n_frames());
    Ranking full = rank_all(idx, t, k);
    for (std::size_t j = 0; j < full.entries.size(); ++j) {
        if (full.entries[j].first == inst.gold) {
            row.gold_rank = j + 1;
            break;
        }
    }
    return row;
}

}  // namespace detail

// Acc over with-lf predictions, R@k over the unfiltered ranking, Overall as
// their harmonic mean, plus the ambiguous subset (candidate sets >= 2).
inline EvalResult evaluate(const DualModel& model, const FrameEmbeddingIndex& idx,
                           const Vocab& vocab, const Lexicon& lex,
                           const std::vector<Instance>& split, int threads = 1) {
    if (split.empty()) throw DataError("evaluate: empty split");
    std::vector<detail::PerInstanceEval> rows(split.size());
    parallel_for(split.size(), threads, [&](std::size_t i) {
        rows[i] = detail::eval_one(model, idx, vocab, lex, split[i], false);
    });
    return detail::aggregate(rows);
}

struct MaskedEval {
    EvalResult normal;
    EvalResult masked;
    double delta = 0.0;  // normal acc - masked acc
};

// Target-masking probe: the second pass replaces every span token with the
// mask id before re-encoding.
inline MaskedEval masked_evaluate(const DualModel& model, const FrameEmbeddingIndex& idx,
                                  const Vocab& vocab, const Lexicon& lex,
                                  const std::vector<Instance>& split, int threads = 1) {
    if (split.empty()) throw DataError("masked_evaluate: empty split");
    MaskedEval out;
    out.normal = evaluate(model, idx, vocab, lex, split, threads);
    std::vector<detail::PerInstanceEval> rows(split.size());
    parallel_for(split.size(), threads, [&](std::size_t i) {
        rows[i] = detail::eval_one(model, idx, vocab, lex, split[i], true);
    });
    out.masked = detail::aggregate(rows);
    out.delta = out.normal.acc_with_lf - out.masked.acc_with_lf;
    return out;
}

struct CentroidEval {
    EvalResult result;  // R@k fields only; acc fields stay zero
    std::size_t n_definition_fallback = 0;
    std::vector<std::uint8_t> used_definition;  // per frame
};

// Replaces each frame row with the centroid of up to n_per_frame exemplar
// target encodings; frames without exemplars keep the definition encoding.
inline CentroidEval centroid_evaluate(const DualModel& model, const Vocab& vocab,
                                      const Lexicon& lex, const std::vector<Instance>& exemplars,
                                      const std::vector<Instance>& test, std::size_t n_per_frame,
                                      int threads = 1) {
    if (n_per_frame < 1) throw UsageError("centroid_evaluate: n_per_frame must be >= 1");
    if (test.empty()) throw DataError("centroid_evaluate: empty test split");

    Mat reps(lex.n_frames(), model.d);
    std::vector<std::size_t> counts(lex.n_frames(), 0);
    for (const auto& inst : exemplars) {
        auto f = static_cast<std::size_t>(inst.gold);
        if (counts[f] >= n_per_frame) continue;
        Vec t = encode_target(model, vocab, inst);
        double* row = reps.row(f);
        for (std::size_t j = 0; j < model.d; ++j) row[j] += t[j];
        ++counts[f];
    }

    CentroidEval out;
    out.used_definition.assign(lex.n_frames(), 0);
    for (std::size_t f = 0; f < lex.n_frames(); ++f) {
        double* row = reps.row(f);
        if (counts[f] > 0) {
            for (std::size_t j = 0; j < model.d; ++j) row[j] /= static_cast<double>(counts[f]);
        } else {
            out.used_definition[f] = 1;
            ++out.n_definition_fallback;
            Vec rep = encode_frame(model, vocab, lex, static_cast<FrameId>(f));
            for (std::size_t j = 0; j < model.d; ++j) row[j] = rep[j];
        }
    }

    FrameEmbeddingIndex idx = index_from_matrix(std::move(reps), &lex);
    std::vector<detail::PerInstanceEval> rows(test.size());
    parallel_for(test.size(), threads, [&](std::size_t i) {
        Vec t = encode_target(model, vocab, test[i]);
        std::size_t k = std::min<std::size_t>(5, idx.n_frames());
        Ranking full = rank_all(idx, t, k);
        for (std::size_t j = 0; j < full.entries.size(); ++j) {
            if (full.entries[j].first == test[i].gold) {
                rows[i].gold_rank = j + 1;
                break;
            }
        }
    });
    out.result = detail::aggregate(rows);
    out.result.acc_with_lf = 0.0;
    out.result.acc_ambiguous = 0.0;
    out.result.overall = 0.0;
    out.result.n_ambiguous = 0;
    return out;
}

struct StructuralPair {
    FrameId sup = -1;
    FrameId sub = -1;
    double alpha = 0.0;
    double delta_alpha = 0.0;
    double ratio = 0.0;  // delta_alpha / alpha
};

struct StructuralOptions {
    bool alpha_includes_self = true;   // count cos(f_sub, f_sub) in the average
    bool average_over_pairs = true;    // false: average per sub frame first
};

struct StructuralReport {
    std::vector<StructuralPair> pairs;
    double avg_ratio = 0.0;       // over pairs with alpha > 0
    double avg_delta_alpha = 0.0; // over all pairs
    std::size_t n_alpha_positive = 0;
};

// Per Inheritance pair: alpha = mean cosine of the subframe against every
// frame, delta = cos(sub, sup) - alpha. The ratio average keeps only pairs
// with positive alpha.
inline StructuralReport delta_alpha_report(const FrameEmbeddingIndex& idx, const Lexicon& lex,
                                           const StructuralOptions& opt = {}) {
    if (lex.relations.empty()) throw DataError("delta_alpha_report: lexicon has no relations");
    const std::size_t nf = idx.n_frames();

    auto cos_rows = [&](std::size_t a, std::size_t b) {
        const double* ra = idx.reps.row(a);
        const double* rb = idx.reps.row(b);
        double s = 0.0;
        for (std::size_t j = 0; j < idx.reps.cols; ++j) s += ra[j] * rb[j];
        return s / (idx.norms[a] * idx.norms[b]);
    };

    StructuralReport rep;
    double ratio_sum = 0.0, delta_sum = 0.0;
    std::map<FrameId, std::pair<double, std::size_t>> per_sub;  // ratio sum, count
    for (const auto& r : lex.relations) {
        StructuralPair pr;
        pr.sup = r.sup;
        pr.sub = r.sub;
        double sum = 0.0;
        for (std::size_t f = 0; f < nf; ++f) {
            if (!opt.alpha_includes_self && f == static_cast<std::size_t>(r.sub)) continue;
            sum += cos_rows(static_cast<std::size_t>(r.sub), f);
        }
        double denom = opt.alpha_includes_self ? static_cast<double>(nf)
                                               : static_cast<double>(nf - 1);
        pr.alpha = sum / denom;
        pr.delta_alpha = cos_rows(static_cast<std::size_t>(r.sub),
                                  static_cast<std::size_t>(r.sup)) -
                         pr.alpha;
        delta_sum += pr.delta_alpha;
        if (pr.alpha > 0.0) {
            pr.ratio = pr.delta_alpha / pr.alpha;
            ++rep.n_alpha_positive;
            ratio_sum += pr.ratio;
            auto& acc = per_sub[r.sub];
            acc.first += pr.ratio;
            acc.second += 1;
        }
        rep.pairs.push_back(pr);
    }

    rep.avg_delta_alpha = delta_sum / static_cast<double>(rep.pairs.size());
    if (opt.average_over_pairs) {
        rep.avg_ratio = rep.n_alpha_positive
                            ? ratio_sum / static_cast<double>(rep.n_alpha_positive)
                            : 0.0;
    } else {
        double s = 0.0;
        for (const auto& [sub, acc] : per_sub) s += acc.first / static_cast<double>(acc.second);
        rep.avg_ratio = per_sub.empty() ? 0.0 : s / static_cast<double>(per_sub.size());
    }
    return rep;
}

// ---- report serialization ----

inline nlohmann::json eval_to_json(const EvalResult& r) {
    nlohmann::json jr;
    jr["acc_with_lf"] = r.acc_with_lf * 100.0;
    for (const auto& [k, v] : r.r_at) jr["r_at_" + std::to_string(k)] = v * 100.0;
    jr["overall"] = r.overall * 100.0;
    jr["acc_ambiguous"] = r.acc_ambiguous * 100.0;
    jr["n_instances"] = r.n_instances;
    jr["n_ambiguous"] = r.n_ambiguous;
    jr["n_fallback"] = r.n_fallback;
    return jr;
}

inline nlohmann::json structural_to_json(const StructuralReport& r, const Lexicon& lex) {
    nlohmann::json jr;
    jr["avg_ratio"] = r.avg_ratio;
    jr["avg_delta_alpha"] = r.avg_delta_alpha;
    jr["n_pairs"] = r.pairs.size();
    jr["n_alpha_positive"] = r.n_alpha_positive;
    jr["pairs"] = nlohmann::json::array();
    for (const auto& p : r.pairs)
        jr["pairs"].push_back({{"sup", lex.frame(p.sup).name},
                               {"sub", lex.frame(p.sub).name},
                               {"alpha", p.alpha},
                               {"delta_alpha", p.delta_alpha},
                               {"ratio", p.ratio}});
    return jr;
}

inline void write_structural_csv(const StructuralReport& r, const Lexicon& lex,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "sup,sub,alpha,delta_alpha,ratio\n";
    for (const auto& p : r.pairs)
        out << lex.frame(p.sup).name << ',' << lex.frame(p.sub).name << ',' << p.alpha << ','
            << p.delta_alpha << ',' << p.ratio << "\n";
}

}  // namespace framelens
