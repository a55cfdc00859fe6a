#ifndef A2V_GRAPH_HPP_
#define A2V_GRAPH_HPP_

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "a2v/rng.hpp"
#include "a2v/tensor.hpp"

namespace a2v {

enum class OpKind {
    matmul,
    add,
    tanh_,
    sigmoid,
    softmax,
    concat,
    dropout,
    scale,
    mul,
    relu,
    sum,
    cosine,
    bce_loss,
    softmax_ce_loss,
};

const char* op_name(OpKind k);

// Execution tape. Ops append nodes carrying everything backward needs; the
// tape replays forward bit-for-bit and runs reverse accumulation. One graph
// per execution context, never shared across threads.
class Graph {
public:
    Graph();

    // NaN/Inf guard after every op; defaults on in debug builds only.
    bool debug_checks;

    // --- primitives -------------------------------------------------------
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr add(const std::vector<TensorPtr>& xs);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr tanh(const TensorPtr& x);
    TensorPtr sigmoid(const TensorPtr& x);
    TensorPtr softmax(const TensorPtr& x);  // over the last axis
    // stack k same-shape vectors into a {k,n} matrix ({k} when n == 1)
    TensorPtr concat(const std::vector<TensorPtr>& rows);
    // inverted dropout: keeps with probability `keep`, scales kept by 1/keep;
    // identity in eval mode and for keep == 1
    TensorPtr dropout(const TensorPtr& x, double keep, Rng& rng, bool train);
    TensorPtr scale(const TensorPtr& x, double c);
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
    TensorPtr relu(const TensorPtr& x);
    TensorPtr sum(const TensorPtr& x);  // all entries -> scalar

    // cosine similarity of two vectors as a differentiable scalar node
    TensorPtr cosine(const TensorPtr& a, const TensorPtr& b);
    // summed binary cross-entropy of sigmoid scores against one-hot target;
    // scores are clamped to [1e-12, 1-1e-12] before the logs
    TensorPtr bce_loss(const TensorPtr& scores, int target);
    // categorical cross-entropy directly on logits (ablation path)
    TensorPtr softmax_ce_loss(const TensorPtr& logits, int target);

    // uniform dispatch over the single-input / double-input primitive kinds,
    // used by kind-sweep tests
    TensorPtr apply(OpKind kind, const std::vector<TensorPtr>& inputs);

    TensorPtr constant(double v);

    // --- tape -------------------------------------------------------------
    // Re-executes every node in order on the current leaf/parameter values.
    // Dropout reuses its recorded mask, so an unmodified replay is
    // bit-identical to the original forward pass.
    void replay();

    size_t node_count() const { return nodes_.size(); }

    // Backward pass for reverse_accumulate.
    void backward(const TensorPtr& loss);

private:
    struct Node {
        OpKind kind;
        std::vector<int> in;
        int out;
        double attr_c = 0.0;           // scale factor / dropout keep
        int attr_i = 0;                // class target
        std::vector<double> saved;     // dropout mask, etc.
    };

    std::vector<Node> nodes_;
    std::vector<TensorPtr> slots_;
    std::unordered_map<const Tensor*, int> slot_index_;

    int slot_of(const TensorPtr& t);
    TensorPtr emit(OpKind kind, const std::vector<TensorPtr>& inputs,
                   TensorPtr out, double attr_c = 0.0, int attr_i = 0,
                   std::vector<double> saved = {});
    void run_node(const Node& n);
    void check_finite(const Node& n) const;
};

// Accumulates d(loss)/d(p) into p->grad for every requires_grad tensor that
// participates in the graph. loss must be a scalar produced by this graph.
void reverse_accumulate(Graph& graph, const TensorPtr& loss);

// Central-difference gradient verification.
//
// eval(true) must rebuild the computation from current parameter values, run
// backward, accumulate into the parameters' grads and return the loss;
// eval(false) must return the loss only. The evaluation has to be
// deterministic (fix dropout seeds or disable it).
//
// Returns max over parameter coordinates of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double finite_difference_check(const std::function<double(bool)>& eval,
                               const std::vector<TensorPtr>& params,
                               double eps);

// Same check replaying one already-built graph instead of rebuilding.
double finite_difference_check_replay(Graph& graph, const TensorPtr& loss,
                                      const std::vector<TensorPtr>& params,
                                      double eps);

}  // namespace a2v

#endif  // A2V_GRAPH_HPP_
