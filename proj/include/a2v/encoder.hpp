#ifndef A2V_ENCODER_HPP_
#define A2V_ENCODER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "a2v/graph.hpp"

namespace a2v {

enum class Level1Mode { windowed, strided };

struct EncoderConfig {
    int feature_dim = 500;   // D
    int seq_len = 52;        // T
    int window_len = 6;      // L, windowed mode
    Level1Mode level1_mode = Level1Mode::windowed;
    int stride = 8;          // s, strided mode
    int hidden1 = 1024;
    int hidden2 = 512;
    int embed_dim = 300;
    double dropout1_keep = 0.5;  // keep probability on level-1 codes
    int num_classes = 0;         // K
    bool attention_enabled = true;

    void validate() const;
    // codes emitted by level 1 for this config
    int level1_code_count() const;
};

// One LSTM cell: W_* map the input, U_* the previous hidden state.
struct LstmParams {
    TensorPtr W_i, U_i, b_i;
    TensorPtr W_f, U_f, b_f;
    TensorPtr W_o, U_o, b_o;
    TensorPtr W_g, U_g, b_g;
};

// Additive attention: e_j = w . tanh(W_a x_j + U_a h_prev + b_a).
struct AttentionParams {
    TensorPtr W_a, U_a, b_a, w;
};

struct AffineParams {
    TensorPtr W, b;
};

struct EncoderParams {
    LstmParams lstm1, lstm2;
    AttentionParams attn1, attn2;
    AffineParams projection;
    AffineParams classifier;

    // canonical order: lstm1, attn1, lstm2, attn2, projection, classifier
    std::vector<std::pair<std::string, TensorPtr>> named() const;
    std::vector<TensorPtr> all() const;
    size_t total_values() const;
    void zero_grads() const;
};

// Closed-form parameter total for a config; must match allocation.
size_t parameter_count(const EncoderConfig& cfg);

// Fresh parameters: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// forget-gate bias 1, all other biases 0.
EncoderParams init_params(const EncoderConfig& cfg, Rng& rng);

// Deep copy helpers used by the trainer/checkpoints.
EncoderParams clone_params(const EncoderParams& p);

struct LstmState {
    TensorPtr h, c;
};

// Standard LSTM step: i,f,o sigmoid gates, g tanh candidate,
// c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_cell_step(Graph& g, const TensorPtr& x, const LstmState& prev,
                         const LstmParams& p);

struct AttentionResult {
    TensorPtr context;  // weighted sum of the window inputs
    TensorPtr weights;  // softmax scores, sums to 1
};

// Soft attention over a window of input vectors, scored against the
// consuming LSTM's previous hidden state. Pass precomputed W_a x_j terms
// through `premapped` when scoring the same window at every step.
AttentionResult soft_attention(Graph& g, const std::vector<TensorPtr>& window,
                               const TensorPtr& h_prev, const AttentionParams& p,
                               const std::vector<TensorPtr>* premapped = nullptr);

// Level 1: windowed mode splits the sequence into ceil(T/L) non-overlapping
// windows (last one zero-padded) and runs LSTM1 from a zero state per window,
// emitting the final hidden state of each; strided mode runs once over the
// whole sequence and emits h at steps s, 2s, ..., floor(T/s)*s. Dropout is
// applied to emitted codes in train mode only.
std::vector<TensorPtr> encode_level1(Graph& g, const std::vector<std::vector<double>>& seq,
                                     const EncoderParams& params, const EncoderConfig& cfg,
                                     bool train_mode, Rng* dropout_rng);

// Level 2: one pass of LSTM2 over the codes with attention across all of
// them at every step; returns the final hidden state.
TensorPtr encode_level2(Graph& g, const std::vector<TensorPtr>& codes,
                        const EncoderParams& params, const EncoderConfig& cfg);

// Full encoder: level 1 -> level 2 -> affine projection to embed_dim.
TensorPtr encode(Graph& g, const std::vector<std::vector<double>>& seq,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train_mode, Rng* dropout_rng);

// Pre-sigmoid class scores of an embedding.
TensorPtr class_logits(Graph& g, const TensorPtr& embedding, const EncoderParams& params);
// sigmoid(W_c e + b_c), one score in (0,1) per class
TensorPtr classify(Graph& g, const TensorPtr& embedding, const EncoderParams& params);

// Deterministic eval-mode embedding, no tape kept.
std::vector<double> encode_eval(const std::vector<std::vector<double>>& seq,
                                const EncoderParams& params, const EncoderConfig& cfg);

}  // namespace a2v

#endif  // A2V_ENCODER_HPP_
