#ifndef A2V_OBJECTIVE_HPP_
#define A2V_OBJECTIVE_HPP_

#include <vector>

#include "a2v/graph.hpp"

namespace a2v {

// One anchor with its mined contrastive pair. The verb-side negative and the
// embedding-side negative are mined independently, so their classes may
// differ.
struct PairingRecord {
    int anchor_index = -1;              // position in the batch
    int anchor_class = -1;
    TensorPtr anchor;                   // a_i, graph tensor
    TensorPtr positive_verb;            // v_i, constant leaf
    TensorPtr contrastive_verb;         // v_x, constant leaf
    TensorPtr contrastive_embedding;    // a_x, graph tensor
    int contrastive_verb_class = -1;    // class of v_x
    int contrastive_embedding_index = -1;  // batch position of a_x
    int contrastive_embedding_class = -1;
};

using BatchPairing = std::vector<PairingRecord>;

struct LossWeights {
    double lambda_before = 1.0;
    double lambda_after = 0.02;
    double switch_fraction = 0.75;

    void validate() const {
        if (!(switch_fraction >= 0.0 && switch_fraction <= 1.0))
            throw Error::usage("loss weights: switch_fraction must be in [0,1]");
        if (lambda_before < 0.0 || lambda_after < 0.0)
            throw Error::usage("loss weights: lambda must be >= 0");
    }
};

enum class CeMode { sigmoid_bce, softmax_ce };
enum class NegativesMode { mined, all };

// sum_i (1 - s(a_i, v_i)) + max{0, s(a_x, v_i)} + max{0, s(a_i, v_x)}
TensorPtr pairwise_ranking_loss(Graph& g, const BatchPairing& pairing);

// Summed binary cross-entropy against the one-hot target (default CE path).
TensorPtr cross_entropy_loss(Graph& g, const TensorPtr& scores, int target);

// lambda_before while global_iter < switch_fraction * iters_per_epoch,
// lambda_after from the boundary on (forever).
double lambda_schedule(long global_iter, long iters_per_epoch, const LossWeights& w);

// L_PR + lambda * L_CE
TensorPtr dual_loss(Graph& g, const TensorPtr& l_pr, const TensorPtr& l_ce, double lambda);

// Candidate labels for mining: class id -> verb vector.
struct LabelEntry {
    int class_id;
    std::vector<double> vector;
};

// For each anchor picks (a) the wrong-class verb vector most similar to the
// anchor embedding and (b) the wrong-class batch embedding most similar to
// the anchor's verb vector. Ties break toward the lowest class id, then the
// lowest batch index. Selection reads current values only; the returned
// records reference the live graph tensors.
BatchPairing mine_hard_negatives(const std::vector<TensorPtr>& embeddings,
                                 const std::vector<int>& classes,
                                 const std::vector<LabelEntry>& label_table);

// One record per (anchor, wrong-class batch item) pair instead of the mined
// hardest one (ablation path behind NegativesMode::all).
BatchPairing all_negatives_pairing(const std::vector<TensorPtr>& embeddings,
                                   const std::vector<int>& classes,
                                   const std::vector<LabelEntry>& label_table);

}  // namespace a2v

#endif  // A2V_OBJECTIVE_HPP_
