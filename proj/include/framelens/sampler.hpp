#pragma once

#include <random>
#include <set>
#include <vector>

#include "framelens/corpus.hpp"
#include "framelens/lexicon.hpp"

namespace framelens {

struct Batch {
    std::vector<Instance> instances;
    std::vector<std::size_t> source_indices;  // positions in the originating slice
};

enum class NegativeKind { in_batch, in_candidate };
enum class Provenance { candidate, sibling, random_pad };

// Ordered negative frame ids for one instance; gold never appears and ids
// are unique. in_candidate sets carry per-id provenance.
struct NegativeSet {
    std::vector<FrameId> ids;
    NegativeKind kind = NegativeKind::in_batch;
    std::vector<Provenance> provenance;
};

// Seeded Fisher-Yates; hand-rolled so shuffles are stable across standard
// library versions.
inline void seeded_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng() % i;
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<Batch> make_batches(const std::vector<Instance>& slice, std::size_t batch_size,
                                       std::uint64_t seed) {
    if (batch_size < 2) throw UsageError("batch size must be >= 2");
    if (slice.empty()) throw DataError("make_batches: empty corpus slice");

    std::vector<std::size_t> order(slice.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, seed);

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t end = std::min(order.size(), start + batch_size);
        if (end - start < 2) break;  // a 1-instance batch has no in-batch negatives
        Batch b;
        for (std::size_t k = start; k < end; ++k) {
            b.instances.push_back(slice[order[k]]);
            b.source_indices.push_back(order[k]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

// Gold frames of the other batch members, first-occurrence order, own gold
// excluded so the loss denominator never counts f+ twice.
inline NegativeSet in_batch_negatives(const Batch& batch, std::size_t i) {
    if (i >= batch.instances.size()) throw UsageError("in_batch_negatives: bad index");
    NegativeSet out;
    out.kind = NegativeKind::in_batch;
    FrameId own = batch.instances[i].gold;
    std::set<FrameId> seen{own};
    for (std::size_t j = 0; j < batch.instances.size(); ++j) {
        if (j == i) continue;
        FrameId g = batch.instances[j].gold;
        if (seen.insert(g).second) out.ids.push_back(g);
    }
    return out;
}

// Candidate frames first (ascending id, gold removed), then siblings of the
// gold frame, then seeded random padding, stopping at exactly n.
inline NegativeSet in_candidate_negatives(const Lexicon& lex, const Instance& inst, std::size_t n,
                                          std::uint64_t seed) {
    if (n < 1) throw UsageError("in_candidate_negatives: n must be >= 1");
    if (lex.n_frames() <= n)
        throw DataError("in_candidate_negatives: lexicon has " + std::to_string(lex.n_frames()) +
                        " frames, cannot fill " + std::to_string(n) +
                        " negatives without duplicates");

    NegativeSet out;
    out.kind = NegativeKind::in_candidate;
    std::set<FrameId> chosen;
    auto push = [&](FrameId f, Provenance p) {
        if (f == inst.gold || !chosen.insert(f).second) return;
        out.ids.push_back(f);
        out.provenance.push_back(p);
    };

    if (auto cands = candidates_for(lex, inst.lu)) {
        for (FrameId f : *cands) {
            if (out.ids.size() == n) break;
            push(f, Provenance::candidate);
        }
    }
    for (FrameId f : siblings_of(lex, inst.gold)) {
        if (out.ids.size() == n) break;
        push(f, Provenance::sibling);
    }

    if (out.ids.size() < n) {
        std::vector<FrameId> remaining;
        for (std::size_t f = 0; f < lex.n_frames(); ++f) {
            FrameId id = static_cast<FrameId>(f);
            if (id != inst.gold && !chosen.count(id)) remaining.push_back(id);
        }
        std::mt19937_64 rng(seed);
        while (out.ids.size() < n) {
            std::size_t k = rng() % remaining.size();
            push(remaining[k], Provenance::random_pad);
            remaining[k] = remaining.back();
            remaining.pop_back();
        }
    }
    return out;
}

}  // namespace framelens
