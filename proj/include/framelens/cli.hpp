#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "framelens/framelens.hpp"

namespace framelens::cli {

namespace detail {

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

struct LoadedData {
    Lexicon lex;
    std::vector<Instance> corpus;
    Vocab vocab;
};

inline LoadedData load_data(const std::string& lexicon_path, const std::string& corpus_path) {
    LoadedData d;
    d.lex = load_lexicon(lexicon_path);
    d.corpus = load_corpus(corpus_path, d.lex);
    if (d.corpus.empty()) throw DataError("corpus " + corpus_path + " is empty");
    d.vocab = build_vocab(d.corpus, d.lex);
    return d;
}

inline Checkpoint load_checked(const std::string& path, const Vocab& vocab) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.vocab_hash != vocab.manifest_hash())
        throw DataError("checkpoint " + path +
                        " was trained against a different lexicon/corpus (vocab hash mismatch)");
    return ck;
}

inline OptimHyper optim_from_json(const nlohmann::json& j, OptimHyper base) {
    if (j.contains("lr")) base.lr = j.at("lr").get<double>();
    if (j.contains("beta1")) base.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) base.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) base.eps = j.at("eps").get<double>();
    if (j.contains("weight_decay")) base.weight_decay = j.at("weight_decay").get<double>();
    return base;
}

inline StageConfig stage_from_json(const nlohmann::json& j, StageConfig base) {
    if (j.contains("objective"))
        base.objective = objective_from_string(j.at("objective").get<std::string>());
    if (j.contains("split")) base.split = split_from_string(j.at("split").get<std::string>());
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("grad_accum")) base.grad_accum = j.at("grad_accum").get<std::size_t>();
    if (j.contains("tau")) base.tau = j.at("tau").get<double>();
    if (j.contains("candidate_n")) base.candidate_n = j.at("candidate_n").get<std::size_t>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("optim")) base.optim = optim_from_json(j.at("optim"), base.optim);
    return base;
}

inline nlohmann::json stage_to_json(const StageConfig& s) {
    return nlohmann::json{{"objective", objective_to_string(s.objective)},
                          {"split", split_to_string(s.split)},
                          {"batch_size", s.batch_size},
                          {"grad_accum", s.grad_accum},
                          {"tau", s.tau},
                          {"candidate_n", s.candidate_n},
                          {"epochs", s.epochs},
                          {"seed", s.seed},
                          {"optim",
                           {{"lr", s.optim.lr},
                            {"beta1", s.optim.beta1},
                            {"beta2", s.optim.beta2},
                            {"eps", s.optim.eps},
                            {"weight_decay", s.optim.weight_decay}}}};
}

}  // namespace detail

// Desk-scale training defaults; batch shape and temperatures follow the
// reference two-stage recipe. A config file overrides field by field.
struct TrainSetup {
    std::size_t d = 64;
    Mode mode = Mode::dual;
    StageConfig stage1;
    StageConfig stage2;

    TrainSetup() {
        stage1.objective = Objective::in_batch;
        stage1.split = Split::exemplar;
        stage1.batch_size = 32;
        stage1.grad_accum = 1;
        stage1.tau = 0.07;
        stage1.epochs = 40;

        stage2.objective = Objective::in_candidate;
        stage2.split = Split::train;
        stage2.batch_size = 8;
        stage2.grad_accum = 1;
        stage2.tau = 1.0;
        stage2.candidate_n = 15;
        stage2.epochs = 4;
    }
};

inline TrainSetup load_train_setup(const std::string& config_path, std::uint64_t seed) {
    TrainSetup setup;
    setup.stage1.seed = mix64(seed, 101);
    setup.stage2.seed = mix64(seed, 202);
    if (config_path.empty()) return setup;

    std::ifstream in(config_path);
    if (!in) throw DataError("cannot open config " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config parse error in " + config_path + ": " + e.what());
    }
    if (j.contains("d")) setup.d = j.at("d").get<std::size_t>();
    if (j.contains("mode")) setup.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("stage1")) setup.stage1 = detail::stage_from_json(j.at("stage1"), setup.stage1);
    if (j.contains("stage2")) setup.stage2 = detail::stage_from_json(j.at("stage2"), setup.stage2);
    return setup;
}

inline int run(std::vector<std::string> args) {
    CLI::App app{"frame identification toolkit: dual encoders, contrastive training, "
                 "frame-embedding retrieval"};
    app.require_subcommand(1);

    std::string lexicon_path, corpus_path, checkpoint_path, config_path, out_path;
    std::uint64_t seed = 42;
    int threads = 1;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic lexicon + corpus");
    SynthConfig scfg;
    std::size_t n_ex = 600, n_tr = 300, n_dev = 60, n_te = 120;
    synth->add_option("--families", scfg.n_families, "inheritance families");
    synth->add_option("--frames-per-family", scfg.frames_per_family, "frames per family");
    synth->add_option("--lus", scfg.lus, "lexical units");
    synth->add_option("--exemplars", n_ex, "exemplar instances");
    synth->add_option("--train-instances", n_tr, "train instances");
    synth->add_option("--dev-instances", n_dev, "dev instances");
    synth->add_option("--test-instances", n_te, "test instances");
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--out", out_path, "output directory")->required();

    // validate
    auto* validate = app.add_subcommand("validate", "load files and check every invariant");
    validate->add_option("--lexicon", lexicon_path)->required();
    validate->add_option("--corpus", corpus_path)->required();

    // train
    auto* train = app.add_subcommand("train", "run the two-stage curriculum (or one stage)");
    std::string stage_sel = "both", mode_str;
    std::size_t d_flag = 0;
    train->add_option("--lexicon", lexicon_path)->required();
    train->add_option("--corpus", corpus_path)->required();
    train->add_option("--out", out_path, "output directory")->required();
    train->add_option("--config", config_path, "JSON config overriding stage defaults");
    train->add_option("--stage", stage_sel)->check(CLI::IsMember({"1", "2", "both"}));
    train->add_option("--mode", mode_str)
        ->check(CLI::IsMember({"dual", "lookup_random", "lookup_definition_init"}));
    train->add_option("--d", d_flag, "encoder dimension");
    train->add_option("--seed", seed);
    train->add_option("--checkpoint", checkpoint_path, "starting checkpoint (stage 2 alone)");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    std::string split_str = "test", eval_mode = "both";
    bool masked = false;
    std::size_t centroid_n = 0;
    eval->add_option("--lexicon", lexicon_path)->required();
    eval->add_option("--corpus", corpus_path)->required();
    eval->add_option("--checkpoint", checkpoint_path)->required();
    eval->add_option("--split", split_str)
        ->check(CLI::IsMember({"exemplar", "train", "dev", "test"}));
    eval->add_option("--mode", eval_mode)->check(CLI::IsMember({"with_lf", "without_lf", "both"}));
    eval->add_flag("--masked", masked, "add the masked-target probe");
    eval->add_option("--centroid", centroid_n, "exemplar-centroid evaluation with N per frame");
    eval->add_option("--out", out_path, "report JSON path");
    eval->add_option("--threads", threads);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "rank frames for a corpus or one sentence");
    std::string pred_mode = "with_lf", sentence, lu_str;
    std::vector<std::size_t> span;
    std::size_t topk = 5;
    predict_cmd->add_option("--lexicon", lexicon_path)->required();
    predict_cmd->add_option("--corpus", corpus_path, "corpus to annotate (omit with --sentence)");
    predict_cmd->add_option("--checkpoint", checkpoint_path)->required();
    predict_cmd->add_option("--mode", pred_mode)->check(CLI::IsMember({"with_lf", "without_lf"}));
    predict_cmd->add_option("--sentence", sentence, "whitespace-tokenized sentence");
    predict_cmd->add_option("--span", span, "target span: start end (inclusive)")->expected(2);
    predict_cmd->add_option("--lu", lu_str, "lemma.pos of the target");
    predict_cmd->add_option("--k", topk, "entries kept per ranking");
    predict_cmd->add_option("--out", out_path, "predictions JSONL path");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "frame-frame structural report");
    std::string csv_path, average_over = "pairs";
    bool alpha_exclude_self = false;
    analyze->add_option("--lexicon", lexicon_path)->required();
    analyze->add_option("--corpus", corpus_path)->required();
    analyze->add_option("--checkpoint", checkpoint_path)->required();
    analyze->add_option("--out", out_path, "report JSON path");
    analyze->add_option("--csv", csv_path, "per-pair CSV path");
    analyze->add_flag("--alpha-exclude-self", alpha_exclude_self);
    analyze->add_option("--average-over", average_over)->check(CLI::IsMember({"pairs", "frames"}));

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int gc_configs = 10;
    gradcheck->add_option("--seed", seed);
    gradcheck->add_option("--configs", gc_configs, "seeded configurations to sweep");

    try {
        std::reverse(args.begin(), args.end());  // CLI11 consumes back to front
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            scfg.seed = seed;
            scfg.instances_per_split = {{Split::exemplar, n_ex},
                                        {Split::train, n_tr},
                                        {Split::dev, n_dev},
                                        {Split::test, n_te}};
            auto [lex, corpus] = generate_synthetic(scfg);
            std::filesystem::create_directories(out_path);
            save_lexicon(lex, out_path + "/lexicon.json");
            save_corpus(corpus, lex, out_path + "/corpus.jsonl");
            std::cerr << "wrote " << lex.n_frames() << " frames, " << corpus.size()
                      << " instances to " << out_path << "\n";
            return 0;
        }

        if (validate->parsed()) {
            auto data = detail::load_data(lexicon_path, corpus_path);
            std::cerr << "lexicon: " << data.lex.n_frames() << " frames, "
                      << data.lex.lexical_units.size() << " lexical units, "
                      << data.lex.relations.size() << " Inheritance relations\n";
            std::cerr << "corpus: " << data.corpus.size() << " instances (";
            bool first = true;
            for (const auto& [s, c] : split_counts(data.corpus)) {
                if (!first) std::cerr << ", ";
                std::cerr << split_to_string(s) << " " << c;
                first = false;
            }
            std::cerr << ")\nvocab: " << data.vocab.size() << " tokens, hash "
                      << data.vocab.manifest_hash() << "\n";
            return 0;
        }

        if (train->parsed()) {
            auto data = detail::load_data(lexicon_path, corpus_path);
            TrainSetup setup = load_train_setup(config_path, seed);
            if (!mode_str.empty()) setup.mode = mode_from_string(mode_str);
            if (d_flag) setup.d = d_flag;
            std::filesystem::create_directories(out_path);

            DualModel model;
            if (!checkpoint_path.empty()) {
                model = detail::load_checked(checkpoint_path, data.vocab).model;
            } else {
                model = make_model(data.vocab.size(), setup.d, setup.mode, seed,
                                   data.lex.n_frames());
                if (setup.mode == Mode::lookup_definition_init)
                    model = init_table_from_definitions(model, data.vocab, data.lex);
            }

            nlohmann::json report;
            report["config"] = {{"d", setup.d},
                                {"mode", mode_to_string(setup.mode)},
                                {"seed", seed},
                                {"stage1", detail::stage_to_json(setup.stage1)},
                                {"stage2", detail::stage_to_json(setup.stage2)}};

            auto report_stage = [](const TrainReport& r) {
                return nlohmann::json{{"epoch_mean_loss", r.epoch_mean_loss},
                                      {"checkpoint", r.checkpoint_path}};
            };

            if (stage_sel == "both") {
                auto [r1, r2] = train_coarse_to_fine(model, data.corpus, data.vocab, data.lex,
                                                     setup.stage1, setup.stage2, out_path);
                std::cerr << "stage 1: " << r1.epoch_mean_loss.size() << " epochs, "
                          << r1.wall_seconds << " s\n";
                std::cerr << "stage 2: " << r2.epoch_mean_loss.size() << " epochs, "
                          << r2.wall_seconds << " s\n";
                report["stage1"] = report_stage(r1);
                report["stage2"] = report_stage(r2);
            } else {
                const StageConfig& cfg = stage_sel == "1" ? setup.stage1 : setup.stage2;
                OptimState st = init_optim_state(model, cfg.optim);
                TrainReport r = train_stage(model, data.corpus, data.vocab, data.lex, cfg, st);
                r.checkpoint_path = out_path + "/checkpoint_stage" + stage_sel + ".json";
                save_checkpoint(model, st, data.vocab.manifest_hash(), r.checkpoint_path);
                std::cerr << "stage " << stage_sel << ": " << r.epoch_mean_loss.size()
                          << " epochs, " << r.wall_seconds << " s\n";
                report["stage" + stage_sel] = report_stage(r);
            }
            detail::write_json(report, out_path + "/train_report.json");
            return 0;
        }

        if (eval->parsed()) {
            auto data = detail::load_data(lexicon_path, corpus_path);
            Checkpoint ck = detail::load_checked(checkpoint_path, data.vocab);
            FrameEmbeddingIndex idx = build_index(ck.model, data.vocab, data.lex, threads);
            auto slice = split_slice(data.corpus, split_from_string(split_str));

            nlohmann::json report;
            report["config"] = {{"split", split_str},
                                {"mode", eval_mode},
                                {"checkpoint", checkpoint_path}};

            EvalResult res = evaluate(ck.model, idx, data.vocab, data.lex, slice, threads);
            nlohmann::json jr = eval_to_json(res);
            if (eval_mode == "with_lf") {
                jr.erase("r_at_1");
                jr.erase("r_at_3");
                jr.erase("r_at_5");
                jr.erase("overall");
            } else if (eval_mode == "without_lf") {
                jr.erase("acc_with_lf");
                jr.erase("acc_ambiguous");
                jr.erase("overall");
                jr.erase("n_fallback");
            }
            report["results"] = jr;

            if (masked) {
                MaskedEval me = masked_evaluate(ck.model, idx, data.vocab, data.lex, slice,
                                                threads);
                report["masked"] = {{"normal_acc", me.normal.acc_with_lf * 100.0},
                                    {"masked_acc", me.masked.acc_with_lf * 100.0},
                                    {"delta", me.delta * 100.0}};
            }
            if (centroid_n > 0) {
                auto exemplars = split_slice(data.corpus, Split::exemplar);
                CentroidEval ce = centroid_evaluate(ck.model, data.vocab, data.lex, exemplars,
                                                    slice, centroid_n, threads);
                report["centroid"] = {{"r_at_1", ce.result.r_at[1] * 100.0},
                                      {"r_at_3", ce.result.r_at[3] * 100.0},
                                      {"r_at_5", ce.result.r_at[5] * 100.0},
                                      {"definition_fallbacks", ce.n_definition_fallback}};
            }

            if (out_path.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                detail::write_json(report, out_path);
                std::cerr << "wrote " << out_path << "\n";
            }
            return 0;
        }

        if (predict_cmd->parsed()) {
            Lexicon lex = load_lexicon(lexicon_path);
            PredictMode pm =
                pred_mode == "with_lf" ? PredictMode::with_lf : PredictMode::without_lf;

            std::vector<Instance> targets;
            Vocab vocab;
            if (!sentence.empty()) {
                if (span.size() != 2 || lu_str.empty())
                    throw UsageError("--sentence requires --span and --lu");
                auto dot = lu_str.rfind('.');
                if (dot == std::string::npos)
                    throw UsageError("--lu must look like lemma.pos");
                Instance inst;
                std::istringstream iss(sentence);
                std::string tok;
                while (iss >> tok) inst.tokens.push_back(tok);
                inst.target_start = span[0];
                inst.target_end = span[1];
                inst.lu = make_lemma_pos(lu_str.substr(0, dot), lu_str.substr(dot + 1));
                inst.gold = 0;  // unused for prediction
                if (inst.tokens.empty() || inst.target_end >= inst.tokens.size() ||
                    inst.target_start > inst.target_end)
                    throw DataError("target span out of range for the sentence");
                targets.push_back(inst);
                // vocab must match the checkpoint: derive it from the corpus
                if (corpus_path.empty())
                    throw UsageError("predict needs --corpus to rebuild the vocabulary");
                auto corpus = load_corpus(corpus_path, lex);
                vocab = build_vocab(corpus, lex);
            } else {
                if (corpus_path.empty())
                    throw UsageError("predict needs --corpus or --sentence");
                auto corpus = load_corpus(corpus_path, lex);
                vocab = build_vocab(corpus, lex);
                targets = corpus;
            }

            Checkpoint ck = detail::load_checked(checkpoint_path, vocab);
            FrameEmbeddingIndex idx = build_index(ck.model, vocab, lex);

            std::ostream* os = &std::cout;
            std::ofstream file;
            if (!out_path.empty()) {
                file.open(out_path);
                if (!file) throw DataError("cannot write " + out_path);
                os = &file;
            }
            for (std::size_t i = 0; i < targets.size(); ++i) {
                Prediction p = predict(ck.model, idx, vocab, lex, targets[i], pm, topk);
                (*os) << prediction_to_json(p, lex, i, pm).dump() << "\n";
            }
            return 0;
        }

        if (analyze->parsed()) {
            auto data = detail::load_data(lexicon_path, corpus_path);
            Checkpoint ck = detail::load_checked(checkpoint_path, data.vocab);
            FrameEmbeddingIndex idx = build_index(ck.model, data.vocab, data.lex);

            StructuralOptions opt;
            opt.alpha_includes_self = !alpha_exclude_self;
            opt.average_over_pairs = average_over == "pairs";
            StructuralReport rep = delta_alpha_report(idx, data.lex, opt);

            nlohmann::json report;
            report["config"] = {{"alpha_includes_self", opt.alpha_includes_self},
                                {"average_over", average_over}};
            report["results"] = structural_to_json(rep, data.lex);
            if (!csv_path.empty()) write_structural_csv(rep, data.lex, csv_path);

            if (out_path.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                detail::write_json(report, out_path);
                std::cerr << "wrote " << out_path << "\n";
            }
            return 0;
        }

        if (gradcheck->parsed()) {
            GradCheckResult res = run_gradcheck(seed, gc_configs);
            std::cout << "max relative error: " << res.max_rel_err << " over " << res.n_configs
                      << " configs\n";
            if (res.max_rel_err > 1e-4)
                throw NumericError("gradient check failed: max relative error " +
                                   std::to_string(res.max_rel_err));
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace framelens::cli
