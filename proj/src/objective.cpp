#include "a2v/objective.hpp"

#include <algorithm>
#include <map>

namespace a2v {

TensorPtr pairwise_ranking_loss(Graph& g, const BatchPairing& pairing) {
    if (pairing.empty()) throw Error::usage("pairwise_ranking_loss: empty pairing");
    TensorPtr one = g.constant(1.0);
    std::vector<TensorPtr> terms;
    terms.reserve(pairing.size());
    for (const PairingRecord& r : pairing) {
        TensorPtr s_pos = g.cosine(r.anchor, r.positive_verb);
        TensorPtr s_neg_embed = g.cosine(r.contrastive_embedding, r.positive_verb);
        TensorPtr s_neg_verb = g.cosine(r.anchor, r.contrastive_verb);
        terms.push_back(g.add({g.add(one, g.scale(s_pos, -1.0)),
                               g.relu(s_neg_embed), g.relu(s_neg_verb)}));
    }
    return terms.size() == 1 ? terms[0] : g.add(terms);
}

TensorPtr cross_entropy_loss(Graph& g, const TensorPtr& scores, int target) {
    return g.bce_loss(scores, target);
}

double lambda_schedule(long global_iter, long iters_per_epoch, const LossWeights& w) {
    if (iters_per_epoch < 1)
        throw Error::usage("lambda_schedule: iters_per_epoch must be >= 1");
    w.validate();
    double boundary = w.switch_fraction * static_cast<double>(iters_per_epoch);
    return static_cast<double>(global_iter) < boundary ? w.lambda_before : w.lambda_after;
}

TensorPtr dual_loss(Graph& g, const TensorPtr& l_pr, const TensorPtr& l_ce, double lambda) {
    if (lambda < 0.0) throw Error::usage("dual_loss: lambda must be >= 0");
    return g.add(l_pr, g.scale(l_ce, lambda));
}

namespace {

// leaf tensors for verb vectors, one per class per call
class LabelLeaves {
public:
    explicit LabelLeaves(const std::vector<LabelEntry>& table) {
        for (const auto& e : table) vectors_[e.class_id] = &e.vector;
    }

    const std::vector<double>& values(int class_id) const {
        auto it = vectors_.find(class_id);
        if (it == vectors_.end())
            throw Error::data("mining: class " + std::to_string(class_id) +
                              " has no verb vector in the label table");
        return *it->second;
    }

    TensorPtr leaf(int class_id) {
        auto it = leaves_.find(class_id);
        if (it != leaves_.end()) return it->second;
        TensorPtr t = make_vector(values(class_id));
        leaves_.emplace(class_id, t);
        return t;
    }

    const std::map<int, const std::vector<double>*>& all() const { return vectors_; }

private:
    std::map<int, const std::vector<double>*> vectors_;  // ordered for tie-breaks
    std::map<int, TensorPtr> leaves_;
};

void check_batch(const std::vector<TensorPtr>& embeddings, const std::vector<int>& classes) {
    if (embeddings.size() != classes.size())
        throw Error::usage("mining: embeddings/classes size mismatch");
    if (embeddings.empty()) throw Error::usage("mining: empty batch");
    int first = classes[0];
    bool multi = false;
    for (int c : classes)
        if (c != first) { multi = true; break; }
    if (!multi) throw Error::data("mining: no contrastive class available (single-class batch)");
}

}  // namespace

BatchPairing mine_hard_negatives(const std::vector<TensorPtr>& embeddings,
                                 const std::vector<int>& classes,
                                 const std::vector<LabelEntry>& label_table) {
    check_batch(embeddings, classes);
    LabelLeaves leaves(label_table);

    BatchPairing out;
    out.reserve(embeddings.size());
    for (size_t i = 0; i < embeddings.size(); ++i) {
        PairingRecord rec;
        rec.anchor_index = static_cast<int>(i);
        rec.anchor_class = classes[i];
        rec.anchor = embeddings[i];
        rec.positive_verb = leaves.leaf(classes[i]);

        // v_x: the wrong-class verb vector the anchor is most drawn to.
        // Iterating the table in class order makes the tie-break exact.
        double best = 0.0;
        bool have = false;
        for (const auto& [cls, vec] : leaves.all()) {
            if (cls == classes[i]) continue;
            double s = cosine_similarity_values(embeddings[i]->values, *vec);
            if (!have || s > best) {
                best = s;
                have = true;
                rec.contrastive_verb_class = cls;
            }
        }
        if (!have)
            throw Error::data("mining: no contrastive class available for class " +
                              std::to_string(classes[i]));
        rec.contrastive_verb = leaves.leaf(rec.contrastive_verb_class);

        // a_x: the wrong-class batch embedding most similar to the anchor's verb.
        const std::vector<double>& anchor_verb = leaves.values(classes[i]);
        have = false;
        best = 0.0;
        for (size_t j = 0; j < embeddings.size(); ++j) {
            if (classes[j] == classes[i]) continue;
            double s = cosine_similarity_values(embeddings[j]->values, anchor_verb);
            bool better = !have || s > best ||
                          (s == best && (classes[j] < rec.contrastive_embedding_class ||
                                         (classes[j] == rec.contrastive_embedding_class &&
                                          static_cast<int>(j) < rec.contrastive_embedding_index)));
            if (better) {
                best = s;
                have = true;
                rec.contrastive_embedding_index = static_cast<int>(j);
                rec.contrastive_embedding_class = classes[j];
            }
        }
        rec.contrastive_embedding = embeddings[static_cast<size_t>(rec.contrastive_embedding_index)];
        out.push_back(std::move(rec));
    }
    return out;
}

BatchPairing all_negatives_pairing(const std::vector<TensorPtr>& embeddings,
                                   const std::vector<int>& classes,
                                   const std::vector<LabelEntry>& label_table) {
    check_batch(embeddings, classes);
    LabelLeaves leaves(label_table);

    BatchPairing out;
    for (size_t i = 0; i < embeddings.size(); ++i) {
        for (size_t j = 0; j < embeddings.size(); ++j) {
            if (classes[j] == classes[i]) continue;
            PairingRecord rec;
            rec.anchor_index = static_cast<int>(i);
            rec.anchor_class = classes[i];
            rec.anchor = embeddings[i];
            rec.positive_verb = leaves.leaf(classes[i]);
            rec.contrastive_verb_class = classes[j];
            rec.contrastive_verb = leaves.leaf(classes[j]);
            rec.contrastive_embedding_index = static_cast<int>(j);
            rec.contrastive_embedding_class = classes[j];
            rec.contrastive_embedding = embeddings[j];
            out.push_back(std::move(rec));
        }
    }
    return out;
}

}  // namespace a2v
