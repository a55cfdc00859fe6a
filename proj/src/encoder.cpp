#include "a2v/encoder.hpp"

#include <cmath>

namespace a2v {

void EncoderConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw Error::usage(std::string("encoder config: ") + name + " must be >= 1");
    };
    positive(feature_dim, "feature_dim");
    positive(seq_len, "seq_len");
    positive(window_len, "window_len");
    positive(stride, "stride");
    positive(hidden1, "hidden1");
    positive(hidden2, "hidden2");
    positive(embed_dim, "embed_dim");
    if (window_len > seq_len)
        throw Error::usage("encoder config: window_len exceeds seq_len");
    if (level1_mode == Level1Mode::strided && stride > seq_len)
        throw Error::usage("encoder config: stride exceeds seq_len");
    if (!(dropout1_keep > 0.0 && dropout1_keep <= 1.0))
        throw Error::usage("encoder config: dropout1_keep must be in (0,1]");
    if (num_classes < 2)
        throw Error::usage("encoder config: num_classes must be >= 2");
}

int EncoderConfig::level1_code_count() const {
    if (level1_mode == Level1Mode::windowed)
        return (seq_len + window_len - 1) / window_len;
    return seq_len / stride;
}

std::vector<std::pair<std::string, TensorPtr>> EncoderParams::named() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    auto cell = [&](const char* prefix, const LstmParams& c) {
        out.emplace_back(std::string(prefix) + ".W_i", c.W_i);
        out.emplace_back(std::string(prefix) + ".U_i", c.U_i);
        out.emplace_back(std::string(prefix) + ".b_i", c.b_i);
        out.emplace_back(std::string(prefix) + ".W_f", c.W_f);
        out.emplace_back(std::string(prefix) + ".U_f", c.U_f);
        out.emplace_back(std::string(prefix) + ".b_f", c.b_f);
        out.emplace_back(std::string(prefix) + ".W_o", c.W_o);
        out.emplace_back(std::string(prefix) + ".U_o", c.U_o);
        out.emplace_back(std::string(prefix) + ".b_o", c.b_o);
        out.emplace_back(std::string(prefix) + ".W_g", c.W_g);
        out.emplace_back(std::string(prefix) + ".U_g", c.U_g);
        out.emplace_back(std::string(prefix) + ".b_g", c.b_g);
    };
    auto attn = [&](const char* prefix, const AttentionParams& a) {
        out.emplace_back(std::string(prefix) + ".W_a", a.W_a);
        out.emplace_back(std::string(prefix) + ".U_a", a.U_a);
        out.emplace_back(std::string(prefix) + ".b_a", a.b_a);
        out.emplace_back(std::string(prefix) + ".w", a.w);
    };
    cell("lstm1", lstm1);
    attn("attn1", attn1);
    cell("lstm2", lstm2);
    attn("attn2", attn2);
    out.emplace_back("projection.W", projection.W);
    out.emplace_back("projection.b", projection.b);
    out.emplace_back("classifier.W", classifier.W);
    out.emplace_back("classifier.b", classifier.b);
    return out;
}

std::vector<TensorPtr> EncoderParams::all() const {
    std::vector<TensorPtr> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

size_t EncoderParams::total_values() const {
    size_t n = 0;
    for (auto& t : all()) n += t->size();
    return n;
}

void EncoderParams::zero_grads() const {
    for (auto& t : all()) t->zero_grad();
}

size_t parameter_count(const EncoderConfig& cfg) {
    auto cell = [](size_t in, size_t h) { return 4 * (h * in + h * h + h); };
    // attention feature dim equals the consuming LSTM's hidden size
    auto attn = [](size_t in, size_t h) { return h * in + h * h + h + h; };
    size_t d = static_cast<size_t>(cfg.feature_dim);
    size_t h1 = static_cast<size_t>(cfg.hidden1);
    size_t h2 = static_cast<size_t>(cfg.hidden2);
    size_t e = static_cast<size_t>(cfg.embed_dim);
    size_t k = static_cast<size_t>(cfg.num_classes);
    return cell(d, h1) + attn(d, h1) + cell(h1, h2) + attn(h1, h2) +
           (e * h2 + e) + (k * e + k);
}

namespace {

TensorPtr uniform_param(int rows, int cols, int fan_in, Rng& rng) {
    double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> v(static_cast<size_t>(rows) * cols);
    for (double& x : v) x = rng.uniform(-k, k);
    if (cols == 1) return make_tensor({rows}, std::move(v), true);
    return make_tensor({rows, cols}, std::move(v), true);
}

TensorPtr bias_param(int n, double fill) {
    return make_tensor({n}, std::vector<double>(static_cast<size_t>(n), fill), true);
}

LstmParams init_cell(int in, int h, Rng& rng) {
    LstmParams c;
    c.W_i = uniform_param(h, in, in, rng);
    c.U_i = uniform_param(h, h, h, rng);
    c.b_i = bias_param(h, 0.0);
    c.W_f = uniform_param(h, in, in, rng);
    c.U_f = uniform_param(h, h, h, rng);
    c.b_f = bias_param(h, 1.0);  // forget gate starts open
    c.W_o = uniform_param(h, in, in, rng);
    c.U_o = uniform_param(h, h, h, rng);
    c.b_o = bias_param(h, 0.0);
    c.W_g = uniform_param(h, in, in, rng);
    c.U_g = uniform_param(h, h, h, rng);
    c.b_g = bias_param(h, 0.0);
    return c;
}

AttentionParams init_attention(int in, int h, Rng& rng) {
    AttentionParams a;
    a.W_a = uniform_param(h, in, in, rng);
    a.U_a = uniform_param(h, h, h, rng);
    a.b_a = bias_param(h, 0.0);
    a.w = uniform_param(h, 1, h, rng);
    return a;
}

}  // namespace

EncoderParams init_params(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.lstm1 = init_cell(cfg.feature_dim, cfg.hidden1, rng);
    p.attn1 = init_attention(cfg.feature_dim, cfg.hidden1, rng);
    p.lstm2 = init_cell(cfg.hidden1, cfg.hidden2, rng);
    p.attn2 = init_attention(cfg.hidden1, cfg.hidden2, rng);
    p.projection.W = uniform_param(cfg.embed_dim, cfg.hidden2, cfg.hidden2, rng);
    p.projection.b = bias_param(cfg.embed_dim, 0.0);
    p.classifier.W = uniform_param(cfg.num_classes, cfg.embed_dim, cfg.embed_dim, rng);
    p.classifier.b = bias_param(cfg.num_classes, 0.0);
    return p;
}

EncoderParams clone_params(const EncoderParams& p) {
    EncoderParams q = p;
    auto copy = [](TensorPtr& t) {
        t = make_tensor(t->shape, t->values, t->requires_grad);
    };
    for (TensorPtr* t : {&q.lstm1.W_i, &q.lstm1.U_i, &q.lstm1.b_i, &q.lstm1.W_f, &q.lstm1.U_f,
                         &q.lstm1.b_f, &q.lstm1.W_o, &q.lstm1.U_o, &q.lstm1.b_o, &q.lstm1.W_g,
                         &q.lstm1.U_g, &q.lstm1.b_g, &q.attn1.W_a, &q.attn1.U_a, &q.attn1.b_a,
                         &q.attn1.w, &q.lstm2.W_i, &q.lstm2.U_i, &q.lstm2.b_i, &q.lstm2.W_f,
                         &q.lstm2.U_f, &q.lstm2.b_f, &q.lstm2.W_o, &q.lstm2.U_o, &q.lstm2.b_o,
                         &q.lstm2.W_g, &q.lstm2.U_g, &q.lstm2.b_g, &q.attn2.W_a, &q.attn2.U_a,
                         &q.attn2.b_a, &q.attn2.w, &q.projection.W, &q.projection.b,
                         &q.classifier.W, &q.classifier.b}) {
        copy(*t);
    }
    return q;
}

LstmState lstm_cell_step(Graph& g, const TensorPtr& x, const LstmState& prev,
                         const LstmParams& p) {
    auto gate = [&](const TensorPtr& W, const TensorPtr& U, const TensorPtr& b) {
        return g.add({g.matmul(W, x), g.matmul(U, prev.h), b});
    };
    TensorPtr i = g.sigmoid(gate(p.W_i, p.U_i, p.b_i));
    TensorPtr f = g.sigmoid(gate(p.W_f, p.U_f, p.b_f));
    TensorPtr o = g.sigmoid(gate(p.W_o, p.U_o, p.b_o));
    TensorPtr cand = g.tanh(gate(p.W_g, p.U_g, p.b_g));
    TensorPtr c = g.add(g.mul(f, prev.c), g.mul(i, cand));
    TensorPtr h = g.mul(o, g.tanh(c));
    return {h, c};
}

AttentionResult soft_attention(Graph& g, const std::vector<TensorPtr>& window,
                               const TensorPtr& h_prev, const AttentionParams& p,
                               const std::vector<TensorPtr>* premapped) {
    if (window.empty()) throw Error::usage("soft_attention: empty window");
    TensorPtr uh = g.matmul(p.U_a, h_prev);
    std::vector<TensorPtr> scores;
    scores.reserve(window.size());
    for (size_t j = 0; j < window.size(); ++j) {
        TensorPtr wx = premapped ? (*premapped)[j] : g.matmul(p.W_a, window[j]);
        TensorPtr u = g.tanh(g.add({wx, uh, p.b_a}));
        scores.push_back(g.matmul(p.w, u));  // scalar alignment score
    }
    TensorPtr alpha = g.softmax(g.concat(scores));
    TensorPtr stacked = g.concat(window);
    TensorPtr context = g.matmul(alpha, stacked);
    return {context, alpha};
}

namespace {

struct Level1Runner {
    Graph& g;
    const EncoderParams& params;
    const EncoderConfig& cfg;

    TensorPtr run_window(const std::vector<TensorPtr>& rows) {
        std::vector<TensorPtr> premapped;
        if (cfg.attention_enabled) {
            premapped.reserve(rows.size());
            for (const auto& r : rows) premapped.push_back(g.matmul(params.attn1.W_a, r));
        }
        LstmState st{zeros({cfg.hidden1}), zeros({cfg.hidden1})};
        for (size_t t = 0; t < rows.size(); ++t) {
            TensorPtr input = cfg.attention_enabled
                                  ? soft_attention(g, rows, st.h, params.attn1, &premapped).context
                                  : rows[t];
            st = lstm_cell_step(g, input, st, params.lstm1);
        }
        return st.h;
    }

    // emits h at every step; caller picks the strided positions
    std::vector<TensorPtr> run_full(const std::vector<TensorPtr>& rows) {
        std::vector<TensorPtr> premapped;
        if (cfg.attention_enabled) {
            premapped.reserve(rows.size());
            for (const auto& r : rows) premapped.push_back(g.matmul(params.attn1.W_a, r));
        }
        std::vector<TensorPtr> hs;
        hs.reserve(rows.size());
        LstmState st{zeros({cfg.hidden1}), zeros({cfg.hidden1})};
        for (size_t t = 0; t < rows.size(); ++t) {
            TensorPtr input = cfg.attention_enabled
                                  ? soft_attention(g, rows, st.h, params.attn1, &premapped).context
                                  : rows[t];
            st = lstm_cell_step(g, input, st, params.lstm1);
            hs.push_back(st.h);
        }
        return hs;
    }
};

}  // namespace

std::vector<TensorPtr> encode_level1(Graph& g, const std::vector<std::vector<double>>& seq,
                                     const EncoderParams& params, const EncoderConfig& cfg,
                                     bool train_mode, Rng* dropout_rng) {
    if (static_cast<int>(seq.size()) != cfg.seq_len)
        throw Error::data("encode_level1: sequence has " + std::to_string(seq.size()) +
                          " rows, config expects " + std::to_string(cfg.seq_len));
    std::vector<TensorPtr> rows;
    rows.reserve(seq.size());
    for (const auto& r : seq) {
        if (static_cast<int>(r.size()) != cfg.feature_dim)
            throw Error::data("encode_level1: feature row has " + std::to_string(r.size()) +
                              " dims, config expects " + std::to_string(cfg.feature_dim));
        rows.push_back(make_vector(r));
    }

    Level1Runner runner{g, params, cfg};
    std::vector<TensorPtr> codes;
    if (cfg.level1_mode == Level1Mode::windowed) {
        int num_windows = cfg.level1_code_count();
        for (int w = 0; w < num_windows; ++w) {
            std::vector<TensorPtr> window;
            window.reserve(static_cast<size_t>(cfg.window_len));
            for (int t = 0; t < cfg.window_len; ++t) {
                int idx = w * cfg.window_len + t;
                // final window padded with zero rows, attended like real input
                window.push_back(idx < cfg.seq_len ? rows[static_cast<size_t>(idx)]
                                                   : zeros({cfg.feature_dim}));
            }
            codes.push_back(runner.run_window(window));
        }
    } else {
        std::vector<TensorPtr> hs = runner.run_full(rows);
        for (int t = cfg.stride; t <= cfg.seq_len; t += cfg.stride)
            codes.push_back(hs[static_cast<size_t>(t - 1)]);
    }

    if (train_mode && cfg.dropout1_keep < 1.0) {
        if (!dropout_rng)
            throw Error::usage("encode_level1: train mode with dropout needs an RNG");
        for (auto& c : codes) c = g.dropout(c, cfg.dropout1_keep, *dropout_rng, true);
    }
    return codes;
}

TensorPtr encode_level2(Graph& g, const std::vector<TensorPtr>& codes,
                        const EncoderParams& params, const EncoderConfig& cfg) {
    if (codes.empty()) throw Error::usage("encode_level2: no input codes");
    std::vector<TensorPtr> premapped;
    if (cfg.attention_enabled) {
        premapped.reserve(codes.size());
        for (const auto& c : codes) premapped.push_back(g.matmul(params.attn2.W_a, c));
    }
    LstmState st{zeros({cfg.hidden2}), zeros({cfg.hidden2})};
    for (size_t t = 0; t < codes.size(); ++t) {
        TensorPtr input = cfg.attention_enabled
                              ? soft_attention(g, codes, st.h, params.attn2, &premapped).context
                              : codes[t];
        st = lstm_cell_step(g, input, st, params.lstm2);
    }
    return st.h;
}

TensorPtr encode(Graph& g, const std::vector<std::vector<double>>& seq,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train_mode, Rng* dropout_rng) {
    std::vector<TensorPtr> codes = encode_level1(g, seq, params, cfg, train_mode, dropout_rng);
    TensorPtr v = encode_level2(g, codes, params, cfg);
    return g.add(g.matmul(params.projection.W, v), params.projection.b);
}

TensorPtr class_logits(Graph& g, const TensorPtr& embedding, const EncoderParams& params) {
    return g.add(g.matmul(params.classifier.W, embedding), params.classifier.b);
}

TensorPtr classify(Graph& g, const TensorPtr& embedding, const EncoderParams& params) {
    return g.sigmoid(class_logits(g, embedding, params));
}

std::vector<double> encode_eval(const std::vector<std::vector<double>>& seq,
                                const EncoderParams& params, const EncoderConfig& cfg) {
    Graph g;
    return encode(g, seq, params, cfg, false, nullptr)->values;
}

}  // namespace a2v
