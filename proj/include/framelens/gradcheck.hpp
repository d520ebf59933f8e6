#pragma once

#include <vector>

#include "framelens/objective.hpp"
#include "framelens/synthetic.hpp"
#include "framelens/trainer.hpp"

namespace framelens {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int n_configs = 0;
};

// Seeded gradient-oracle sweep: small synthetic fixtures at d=8, batch 4,
// both loss variants, alternating dual and lookup-table modes. Analytic
// gradients are compared against central finite differences.
inline GradCheckResult run_gradcheck(std::uint64_t seed, int n_configs = 10, double eps = 1e-5) {
    GradCheckResult result;
    result.n_configs = n_configs;

    for (int cfg_i = 0; cfg_i < n_configs; ++cfg_i) {
        std::uint64_t s = mix64(seed, static_cast<std::uint64_t>(cfg_i) + 17);
        SynthConfig scfg;
        scfg.n_families = 2;
        scfg.frames_per_family = 4;
        scfg.lus = 10;
        scfg.instances_per_split = {{Split::train, 8}};
        scfg.seed = s;
        auto [lex, corpus] = generate_synthetic(scfg);
        Vocab vocab = build_vocab(corpus, lex);

        Mode mode = (cfg_i % 2 == 0) ? Mode::dual : Mode::lookup_random;
        DualModel model = make_model(vocab.size(), 8, mode, mix64(s, 5), lex.n_frames());
        auto fcache = frame_token_cache(vocab, lex);

        std::vector<Instance> slice = split_slice(corpus, Split::train);
        auto batches = make_batches(slice, 4, mix64(s, 9));
        const Batch& batch = batches.front();

        // In-batch loss at tau = 0.07.
        {
            std::vector<NegativeSet> negs;
            for (std::size_t i = 0; i < batch.instances.size(); ++i)
                negs.push_back(in_batch_negatives(batch, i));
            GradSet analytic = make_grad_set(model);
            batch_loss_and_grads(model, vocab, lex, fcache, batch.instances, negs, 0.07,
                                 &analytic);
            GradSet numeric = finite_difference_grad(model, vocab, lex, batch.instances, negs,
                                                     0.07, eps);
            result.max_rel_err =
                std::max(result.max_rel_err, max_relative_error(analytic, numeric, model.mode));
        }

        // In-candidate loss at tau = 1 with 5 padded negatives.
        {
            std::vector<NegativeSet> negs;
            for (std::size_t i = 0; i < batch.instances.size(); ++i)
                negs.push_back(
                    in_candidate_negatives(lex, batch.instances[i], 5, mix64(s, 21, i)));
            GradSet analytic = make_grad_set(model);
            batch_loss_and_grads(model, vocab, lex, fcache, batch.instances, negs, 1.0, &analytic);
            GradSet numeric =
                finite_difference_grad(model, vocab, lex, batch.instances, negs, 1.0, eps);
            result.max_rel_err =
                std::max(result.max_rel_err, max_relative_error(analytic, numeric, model.mode));
        }
    }
    return result;
}

}  // namespace framelens
