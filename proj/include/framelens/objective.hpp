#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "framelens/encoder.hpp"
#include "framelens/sampler.hpp"

namespace framelens {

// Clamped cosine for ranking and metrics. The loss kernel uses the raw
// quotient so value and gradient come from the same expression.
inline double cosine(const Vec& a, const Vec& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine of a zero-norm vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

struct ContrastiveCase {
    Vec t;
    Vec f_pos;
    std::vector<Vec> negatives;
    double tau = 1.0;
};

namespace detail {

inline double raw_cosine(const Vec& a, const Vec& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine of a zero-norm vector");
    return dot(a, b) / (na * nb);
}

// -log softmax(s_0) over s = cos/tau, via max-subtracted log-sum-exp.
// Writes softmax probabilities when asked (for the backward pass).
inline double nce_loss(const std::vector<double>& cos_scores, double tau,
                       std::vector<double>* probs = nullptr) {
    if (tau <= 0.0) throw NumericError("temperature must be positive");
    std::vector<double> s(cos_scores.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = cos_scores[j] / tau;
    double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - m);
    if (probs) {
        probs->resize(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) (*probs)[j] = std::exp(s[j] - m) / z;
    }
    return std::log(z) + m - s[0];
}

}  // namespace detail

inline double contrastive_loss(const ContrastiveCase& c) {
    std::vector<double> scores{detail::raw_cosine(c.t, c.f_pos)};
    for (const auto& f : c.negatives) scores.push_back(detail::raw_cosine(c.t, f));
    return detail::nce_loss(scores, c.tau);
}

struct EncGrads {
    Mat E, P, W, b;
};

// Gradients shaped like the model; frozen tensors stay zero.
struct GradSet {
    EncGrads target;
    EncGrads frame;
    Mat table;
};

inline EncGrads zero_like(const EncoderParams& p) {
    return EncGrads{Mat(p.E.rows, p.E.cols), Mat(p.P.rows, p.P.cols), Mat(p.W.rows, p.W.cols),
                    Mat(p.b.rows, p.b.cols)};
}

inline GradSet make_grad_set(const DualModel& m) {
    GradSet g;
    g.target = zero_like(m.target);
    g.frame = zero_like(m.frame);
    if (m.lookup()) g.table = Mat(m.table.rows, m.table.cols);
    return g;
}

struct TensorRef {
    const char* name;
    Mat* mat;
};

// The tensors the optimizer updates, in a fixed order shared by gradients,
// moments, and the finite-difference sweep.
inline std::vector<TensorRef> trainable_tensors(DualModel& m) {
    std::vector<TensorRef> v{{"target.E", &m.target.E},
                             {"target.P", &m.target.P},
                             {"target.W", &m.target.W},
                             {"target.b", &m.target.b}};
    if (m.mode == Mode::dual) {
        v.push_back({"frame.E", &m.frame.E});
        v.push_back({"frame.P", &m.frame.P});
        v.push_back({"frame.W", &m.frame.W});
        v.push_back({"frame.b", &m.frame.b});
    } else {
        v.push_back({"table", &m.table});
    }
    return v;
}

inline std::vector<TensorRef> trainable_grads(GradSet& g, Mode mode) {
    std::vector<TensorRef> v{{"target.E", &g.target.E},
                             {"target.P", &g.target.P},
                             {"target.W", &g.target.W},
                             {"target.b", &g.target.b}};
    if (mode == Mode::dual) {
        v.push_back({"frame.E", &g.frame.E});
        v.push_back({"frame.P", &g.frame.P});
        v.push_back({"frame.W", &g.frame.W});
        v.push_back({"frame.b", &g.frame.b});
    } else {
        v.push_back({"table", &g.table});
    }
    return v;
}

namespace detail {

// Backward through h_i = tanh(W x_i + b) for the rows with nonzero dh.
inline void backward_tokens(const EncoderParams& p, const TokenIds& ids, const EncodeTrace& tr,
                            const Mat& dh, EncGrads& g) {
    const std::size_t d = p.d();
    Vec dz(d);
    for (std::size_t i = 0; i < tr.h.rows; ++i) {
        const double* hrow = tr.h.row(i);
        const double* dhrow = dh.row(i);
        bool any = false;
        for (std::size_t j = 0; j < d; ++j) {
            dz[j] = dhrow[j] * (1.0 - hrow[j] * hrow[j]);
            if (dz[j] != 0.0) any = true;
        }
        if (!any) continue;
        const double* x = tr.x.row(i);
        double* gb = g.b.row(0);
        for (std::size_t r = 0; r < d; ++r) {
            gb[r] += dz[r];
            double* gw = g.W.row(r);
            for (std::size_t c = 0; c < d; ++c) gw[c] += dz[r] * x[c];
        }
        double* ge = g.E.row(static_cast<std::size_t>(ids.ids[i]));
        double* gp = g.P.row(i);
        for (std::size_t c = 0; c < d; ++c) {
            double dx = 0.0;
            for (std::size_t r = 0; r < d; ++r) dx += p.W.at(r, c) * dz[r];
            ge[c] += dx;
            gp[c] += dx;
        }
    }
}

// d cos(a,b) / da with cached norms.
inline void add_cosine_grad(const Vec& a, const Vec& b, double na, double nb, double c,
                            double scale, Vec& da) {
    double inv = 1.0 / (na * nb);
    double self = c / (na * na);
    for (std::size_t j = 0; j < a.size(); ++j) da[j] += scale * (b[j] * inv - self * a[j]);
}

struct FrameForward {
    EncodeTrace trace;  // dual mode only
    Vec rep;
    double rep_norm = 0.0;
    Vec drep;  // accumulated dL/d rep
};

}  // namespace detail

// Mean loss over the batch, with exact reverse-mode gradients of the mean
// when grads_out is given. Each distinct frame is encoded once; its gradient
// is pushed through the frame encoder (or the lookup table) once with the
// accumulated upstream signal.
inline double batch_loss_and_grads(const DualModel& model, const Vocab& vocab, const Lexicon& lex,
                                   const std::vector<TokenIds>& fcache,
                                   const std::vector<Instance>& instances,
                                   const std::vector<NegativeSet>& negs, double tau,
                                   GradSet* grads_out) {
    if (instances.empty()) throw DataError("batch_loss_and_grads: empty batch");
    if (instances.size() != negs.size())
        throw UsageError("batch_loss_and_grads: instances/negatives size mismatch");
    if (tau <= 0.0) throw NumericError("temperature must be positive");

    const std::size_t d = model.d;

    // Distinct frames in first-appearance order.
    std::vector<FrameId> frame_order;
    std::map<FrameId, std::size_t> frame_slot;
    auto touch = [&](FrameId f) {
        if (frame_slot.emplace(f, frame_order.size()).second) frame_order.push_back(f);
    };
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].gold < 0 || static_cast<std::size_t>(instances[i].gold) >= lex.n_frames())
            throw DataError("batch_loss_and_grads: bad gold frame id");
        for (FrameId f : negs[i].ids)
            if (f == instances[i].gold)
                throw DataError("negative set contains the gold frame \"" +
                                lex.frame(f).name + "\"");
        touch(instances[i].gold);
        for (FrameId f : negs[i].ids) touch(f);
    }

    std::vector<detail::FrameForward> frames(frame_order.size());
    for (std::size_t k = 0; k < frame_order.size(); ++k) {
        FrameId f = frame_order[k];
        auto& fw = frames[k];
        if (model.lookup()) {
            const double* row = model.table.row(static_cast<std::size_t>(f));
            fw.rep.assign(row, row + d);
        } else {
            fw.trace = encode_tokens_trace(model.frame, fcache[static_cast<std::size_t>(f)]);
            fw.rep = frame_rep(fw.trace.h);
        }
        fw.rep_norm = norm(fw.rep);
        if (fw.rep_norm == 0.0)
            throw NumericError("frame \"" + lex.frame(f).name + "\" has a zero-norm representation");
        fw.drep.assign(d, 0.0);
    }

    const double inv_batch = 1.0 / static_cast<double>(instances.size());
    double total_loss = 0.0;

    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& inst = instances[i];
        TokenIds ids = tokenize(inst.tokens, vocab);
        EncodeTrace tr = encode_tokens_trace(model.target, ids);
        std::vector<std::size_t> argmax;
        Vec t = target_rep_argmax(tr.h, inst.target_start, inst.target_end, &argmax);
        double tn = norm(t);
        if (tn == 0.0) throw NumericError("target representation has zero norm");

        std::vector<std::size_t> slots{frame_slot.at(inst.gold)};
        for (FrameId f : negs[i].ids) slots.push_back(frame_slot.at(f));

        std::vector<double> cos_scores(slots.size());
        for (std::size_t j = 0; j < slots.size(); ++j) {
            const auto& fw = frames[slots[j]];
            cos_scores[j] = dot(t, fw.rep) / (tn * fw.rep_norm);
        }

        std::vector<double> probs;
        total_loss += detail::nce_loss(cos_scores, tau, grads_out ? &probs : nullptr);
        if (!grads_out) continue;

        // dL/dcos_j = (p_j - [j==0]) / tau, scaled by the batch mean.
        Vec dt(d, 0.0);
        for (std::size_t j = 0; j < slots.size(); ++j) {
            double dcos = (probs[j] - (j == 0 ? 1.0 : 0.0)) / tau * inv_batch;
            if (dcos == 0.0) continue;
            auto& fw = frames[slots[j]];
            detail::add_cosine_grad(t, fw.rep, tn, fw.rep_norm, cos_scores[j], dcos, dt);
            detail::add_cosine_grad(fw.rep, t, fw.rep_norm, tn, cos_scores[j], dcos, fw.drep);
        }

        // Max pooling routes each dimension to its (tie-broken) argmax row.
        Mat dh(tr.h.rows, d);
        for (std::size_t j = 0; j < d; ++j) dh.at(argmax[j], j) = dt[j];
        detail::backward_tokens(model.target, ids, tr, dh, grads_out->target);
    }

    if (grads_out) {
        for (std::size_t k = 0; k < frames.size(); ++k) {
            auto& fw = frames[k];
            if (model.lookup()) {
                double* row = grads_out->table.row(static_cast<std::size_t>(frame_order[k]));
                for (std::size_t j = 0; j < d; ++j) row[j] += fw.drep[j];
            } else {
                // Mean pooling distributes 1/m to every row.
                const std::size_t m_rows = fw.trace.h.rows;
                Mat dh(m_rows, d);
                for (std::size_t r = 0; r < m_rows; ++r)
                    for (std::size_t j = 0; j < d; ++j)
                        dh.at(r, j) = fw.drep[j] / static_cast<double>(m_rows);
                detail::backward_tokens(model.frame,
                                        fcache[static_cast<std::size_t>(frame_order[k])], fw.trace,
                                        dh, grads_out->frame);
            }
        }
    }

    return total_loss * inv_batch;
}

inline double batch_mean_loss(const DualModel& model, const Vocab& vocab, const Lexicon& lex,
                              const std::vector<TokenIds>& fcache,
                              const std::vector<Instance>& instances,
                              const std::vector<NegativeSet>& negs, double tau) {
    return batch_loss_and_grads(model, vocab, lex, fcache, instances, negs, tau, nullptr);
}

inline std::pair<double, GradSet> loss_and_grads(const DualModel& model, const Vocab& vocab,
                                                 const Lexicon& lex, const Instance& inst,
                                                 const NegativeSet& neg_ids, double tau) {
    GradSet g = make_grad_set(model);
    auto fcache = frame_token_cache(vocab, lex);
    double loss = batch_loss_and_grads(model, vocab, lex, fcache, {inst}, {neg_ids}, tau, &g);
    return {loss, std::move(g)};
}

inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
    if (eps < 1e-6 || eps > 1e-3)
        throw UsageError("central_difference: eps must lie in [1e-6, 1e-3]");
    return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

// Central differences over every trainable scalar; the verification oracle
// for the analytic backward pass. Meant for d <= 16 fixtures.
inline GradSet finite_difference_grad(const DualModel& model, const Vocab& vocab,
                                      const Lexicon& lex,
                                      const std::vector<Instance>& instances,
                                      const std::vector<NegativeSet>& negs, double tau,
                                      double eps) {
    if (eps < 1e-6 || eps > 1e-3)
        throw UsageError("finite_difference_grad: eps must lie in [1e-6, 1e-3]");
    DualModel work = model;
    GradSet out = make_grad_set(model);
    auto params = trainable_tensors(work);
    auto grads = trainable_grads(out, model.mode);
    auto fcache = frame_token_cache(vocab, lex);

    for (std::size_t tn = 0; tn < params.size(); ++tn) {
        Mat& pm = *params[tn].mat;
        Mat& gm = *grads[tn].mat;
        for (std::size_t k = 0; k < pm.size(); ++k) {
            double saved = pm.a[k];
            pm.a[k] = saved + eps;
            double up = batch_mean_loss(work, vocab, lex, fcache, instances, negs, tau);
            pm.a[k] = saved - eps;
            double down = batch_mean_loss(work, vocab, lex, fcache, instances, negs, tau);
            pm.a[k] = saved;
            gm.a[k] = (up - down) / (2.0 * eps);
        }
    }
    return out;
}

// Worst-case relative disagreement; small denominators fall back to an
// absolute comparison at 1e-6 scale so finite-difference noise on untouched
// parameters does not dominate.
inline double max_relative_error(GradSet& analytic, GradSet& numeric, Mode mode) {
    auto a = trainable_grads(analytic, mode);
    auto b = trainable_grads(numeric, mode);
    double worst = 0.0;
    for (std::size_t tn = 0; tn < a.size(); ++tn) {
        const Mat& ma = *a[tn].mat;
        const Mat& mb = *b[tn].mat;
        for (std::size_t k = 0; k < ma.size(); ++k) {
            double denom = std::max({std::abs(ma.a[k]), std::abs(mb.a[k]), 1e-6});
            worst = std::max(worst, std::abs(ma.a[k] - mb.a[k]) / denom);
        }
    }
    return worst;
}

}  // namespace framelens
