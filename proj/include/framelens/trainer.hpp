#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelens/objective.hpp"
#include "framelens/sampler.hpp"

namespace framelens {

struct OptimHyper {
    double lr = 1e-2;  // desk-scale default; the reference setup for large
                       // pretrained encoders uses 2e-5
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Bias-corrected adaptive moments with decoupled weight decay.
struct OptimState {
    std::vector<Mat> m;
    std::vector<Mat> v;
    long step = 0;
    OptimHyper hyper;
};

inline OptimState init_optim_state(DualModel& model, const OptimHyper& hyper) {
    OptimState st;
    st.hyper = hyper;
    for (const auto& t : trainable_tensors(model)) {
        st.m.emplace_back(t.mat->rows, t.mat->cols);
        st.v.emplace_back(t.mat->rows, t.mat->cols);
    }
    return st;
}

inline void adamw_step(OptimState& state, DualModel& model, GradSet& grads) {
    auto params = trainable_tensors(model);
    auto gs = trainable_grads(grads, model.mode);
    if (state.m.size() != params.size())
        throw UsageError("adamw_step: optimizer state does not match the model");

    ++state.step;
    const auto& h = state.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

    for (std::size_t tn = 0; tn < params.size(); ++tn) {
        Mat& p = *params[tn].mat;
        const Mat& g = *gs[tn].mat;
        Mat& m = state.m[tn];
        Mat& v = state.v[tn];
        if (g.rows != p.rows || g.cols != p.cols)
            throw UsageError(std::string("adamw_step: gradient shape mismatch on ") +
                             params[tn].name);
        for (std::size_t k = 0; k < p.size(); ++k) {
            double gk = g.a[k];
            if (!std::isfinite(gk))
                throw NumericError(std::string("non-finite gradient in ") + params[tn].name);
            m.a[k] = h.beta1 * m.a[k] + (1.0 - h.beta1) * gk;
            v.a[k] = h.beta2 * v.a[k] + (1.0 - h.beta2) * gk * gk;
            double mhat = m.a[k] / bc1;
            double vhat = v.a[k] / bc2;
            double theta = p.a[k];
            p.a[k] = theta - h.lr * mhat / (std::sqrt(vhat) + h.eps) -
                     h.lr * h.weight_decay * theta;
        }
    }
}

enum class Objective { in_batch, in_candidate };

inline std::string objective_to_string(Objective o) {
    return o == Objective::in_batch ? "in_batch" : "in_candidate";
}

inline Objective objective_from_string(const std::string& s) {
    if (s == "in_batch") return Objective::in_batch;
    if (s == "in_candidate") return Objective::in_candidate;
    throw DataError("unknown objective \"" + s + "\"");
}

struct StageConfig {
    Objective objective = Objective::in_batch;
    Split split = Split::exemplar;
    std::size_t batch_size = 32;
    std::size_t grad_accum = 1;
    double tau = 0.07;
    std::size_t candidate_n = 15;  // in_candidate only
    std::size_t epochs = 1;
    std::uint64_t seed = 42;
    OptimHyper optim;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;
    double wall_seconds = 0.0;
    std::string checkpoint_path;
};

// One stage: per batch, mean loss over instances; micro-batch gradients are
// averaged across grad_accum batches before each optimizer step. A leftover
// accumulation at epoch end is flushed with the mean over what was gathered.
inline TrainReport train_stage(DualModel& model, const std::vector<Instance>& corpus,
                               const Vocab& vocab, const Lexicon& lex, const StageConfig& cfg,
                               OptimState& state) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Instance> slice = split_slice(corpus, cfg.split);
    if (slice.empty())
        throw DataError("train_stage: split \"" + split_to_string(cfg.split) + "\" is empty");
    if (cfg.grad_accum < 1) throw UsageError("grad_accum must be >= 1");

    auto fcache = frame_token_cache(vocab, lex);
    TrainReport report;

    GradSet accum = make_grad_set(model);
    std::size_t micro = 0;
    auto flush = [&]() {
        if (micro == 0) return;
        auto gs = trainable_grads(accum, model.mode);
        for (auto& t : gs)
            for (double& x : t.mat->a) x /= static_cast<double>(micro);
        adamw_step(state, model, accum);
        for (auto& t : gs) t.mat->zero();
        micro = 0;
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = make_batches(slice, cfg.batch_size, mix64(cfg.seed, epoch));
        double loss_sum = 0.0;
        std::size_t n_seen = 0;

        for (const auto& batch : batches) {
            std::vector<NegativeSet> negs;
            negs.reserve(batch.instances.size());
            for (std::size_t i = 0; i < batch.instances.size(); ++i) {
                if (cfg.objective == Objective::in_batch) {
                    negs.push_back(in_batch_negatives(batch, i));
                } else {
                    negs.push_back(in_candidate_negatives(
                        lex, batch.instances[i], cfg.candidate_n,
                        mix64(cfg.seed, epoch, batch.source_indices[i])));
                }
            }
            GradSet g = make_grad_set(model);
            double loss =
                batch_loss_and_grads(model, vocab, lex, fcache, batch.instances, negs, cfg.tau, &g);
            loss_sum += loss * static_cast<double>(batch.instances.size());
            n_seen += batch.instances.size();

            auto src = trainable_grads(g, model.mode);
            auto dst = trainable_grads(accum, model.mode);
            for (std::size_t tn = 0; tn < src.size(); ++tn)
                for (std::size_t k = 0; k < src[tn].mat->size(); ++k)
                    dst[tn].mat->a[k] += src[tn].mat->a[k];
            if (++micro == cfg.grad_accum) flush();
        }
        flush();
        report.epoch_mean_loss.push_back(n_seen ? loss_sum / static_cast<double>(n_seen) : 0.0);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---- checkpoint format (versioned JSON) ----

constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

inline Mat mat_from_json(const nlohmann::json& j) {
    Mat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.a = j.at("data").get<std::vector<double>>();
    if (m.a.size() != m.rows * m.cols) throw DataError("checkpoint: tensor size mismatch");
    return m;
}

inline nlohmann::json enc_to_json(const EncoderParams& p) {
    return nlohmann::json{{"E", mat_to_json(p.E)},
                          {"P", mat_to_json(p.P)},
                          {"W", mat_to_json(p.W)},
                          {"b", mat_to_json(p.b)}};
}

inline EncoderParams enc_from_json(const nlohmann::json& j) {
    EncoderParams p;
    p.E = mat_from_json(j.at("E"));
    p.P = mat_from_json(j.at("P"));
    p.W = mat_from_json(j.at("W"));
    p.b = mat_from_json(j.at("b"));
    return p;
}

}  // namespace detail

struct Checkpoint {
    DualModel model;
    OptimState state;
    std::string vocab_hash;
};

inline void save_checkpoint(const DualModel& model, const OptimState& state,
                            const std::string& vocab_hash, const std::string& path) {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["d"] = model.d;
    j["mode"] = mode_to_string(model.mode);
    j["vocab_hash"] = vocab_hash;
    j["target"] = detail::enc_to_json(model.target);
    j["frame"] = detail::enc_to_json(model.frame);
    if (model.lookup()) j["table"] = detail::mat_to_json(model.table);

    nlohmann::json jopt;
    jopt["step"] = state.step;
    jopt["hyper"] = {{"lr", state.hyper.lr},
                     {"beta1", state.hyper.beta1},
                     {"beta2", state.hyper.beta2},
                     {"eps", state.hyper.eps},
                     {"weight_decay", state.hyper.weight_decay}};
    jopt["m"] = nlohmann::json::array();
    jopt["v"] = nlohmann::json::array();
    for (const auto& m : state.m) jopt["m"].push_back(detail::mat_to_json(m));
    for (const auto& v : state.v) jopt["v"].push_back(detail::mat_to_json(v));
    j["optim"] = std::move(jopt);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path);
    out << j.dump(1) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt checkpoint " + path + ": " + e.what());
    }
    try {
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw DataError("checkpoint version mismatch in " + path + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
        Checkpoint ck;
        ck.model.d = j.at("d").get<std::size_t>();
        ck.model.mode = mode_from_string(j.at("mode").get<std::string>());
        ck.vocab_hash = j.at("vocab_hash").get<std::string>();
        ck.model.target = detail::enc_from_json(j.at("target"));
        ck.model.frame = detail::enc_from_json(j.at("frame"));
        if (ck.model.lookup()) ck.model.table = detail::mat_from_json(j.at("table"));

        const auto& jopt = j.at("optim");
        ck.state.step = jopt.at("step").get<long>();
        const auto& jh = jopt.at("hyper");
        ck.state.hyper = OptimHyper{jh.at("lr").get<double>(), jh.at("beta1").get<double>(),
                                    jh.at("beta2").get<double>(), jh.at("eps").get<double>(),
                                    jh.at("weight_decay").get<double>()};
        for (const auto& jm : jopt.at("m")) ck.state.m.push_back(detail::mat_from_json(jm));
        for (const auto& jv : jopt.at("v")) ck.state.v.push_back(detail::mat_from_json(jv));
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt checkpoint " + path + ": " + e.what());
    }
}

// Stage 1 (in-batch, exemplars) then stage 2 (in-candidate, train split),
// with the optimizer state reset at the boundary. When out_dir is non-empty
// a checkpoint is written after each stage.
inline std::pair<TrainReport, TrainReport> train_coarse_to_fine(
    DualModel& model, const std::vector<Instance>& corpus, const Vocab& vocab, const Lexicon& lex,
    const StageConfig& stage1, const StageConfig& stage2, const std::string& out_dir = "") {
    if (stage1.objective != Objective::in_batch || stage1.split != Split::exemplar)
        throw UsageError("stage 1 must run the in_batch objective on the exemplar split");
    if (stage2.objective != Objective::in_candidate || stage2.split != Split::train)
        throw UsageError("stage 2 must run the in_candidate objective on the train split");

    OptimState st1 = init_optim_state(model, stage1.optim);
    TrainReport r1 = train_stage(model, corpus, vocab, lex, stage1, st1);
    if (!out_dir.empty()) {
        r1.checkpoint_path = out_dir + "/checkpoint_stage1.json";
        save_checkpoint(model, st1, vocab.manifest_hash(), r1.checkpoint_path);
    }

    OptimState st2 = init_optim_state(model, stage2.optim);
    TrainReport r2 = train_stage(model, corpus, vocab, lex, stage2, st2);
    if (!out_dir.empty()) {
        r2.checkpoint_path = out_dir + "/checkpoint_stage2.json";
        save_checkpoint(model, st2, vocab.manifest_hash(), r2.checkpoint_path);
    }
    return {std::move(r1), std::move(r2)};
}

}  // namespace framelens
