#include "a2v/graph.hpp"

#include <cmath>
#include <cstring>

namespace a2v {

namespace {

#ifdef NDEBUG
constexpr bool kDefaultDebugChecks = false;
#else
constexpr bool kDefaultDebugChecks = true;
#endif

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

struct MatShape {
    int r, c;
    bool promoted_row;  // rank-1 lifted to 1 x n
    bool promoted_col;  // rank-1 lifted to n x 1
};

MatShape as_lhs(const Tensor& t) {
    if (t.rank() == 2) return {t.shape[0], t.shape[1], false, false};
    return {1, t.shape[0], true, false};
}

MatShape as_rhs(const Tensor& t) {
    if (t.rank() == 2) return {t.shape[0], t.shape[1], false, false};
    return {t.shape[0], 1, false, true};
}

}  // namespace

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::tanh_: return "tanh";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::softmax: return "softmax";
        case OpKind::concat: return "concat";
        case OpKind::dropout: return "dropout";
        case OpKind::scale: return "scale";
        case OpKind::mul: return "mul";
        case OpKind::relu: return "relu";
        case OpKind::sum: return "sum";
        case OpKind::cosine: return "cosine";
        case OpKind::bce_loss: return "bce_loss";
        case OpKind::softmax_ce_loss: return "softmax_ce_loss";
    }
    return "?";
}

Graph::Graph() : debug_checks(kDefaultDebugChecks) {}

int Graph::slot_of(const TensorPtr& t) {
    auto it = slot_index_.find(t.get());
    if (it != slot_index_.end()) return it->second;
    int id = static_cast<int>(slots_.size());
    slots_.push_back(t);
    slot_index_.emplace(t.get(), id);
    return id;
}

TensorPtr Graph::emit(OpKind kind, const std::vector<TensorPtr>& inputs,
                      TensorPtr out, double attr_c, int attr_i,
                      std::vector<double> saved) {
    Node n;
    n.kind = kind;
    n.in.reserve(inputs.size());
    for (const auto& t : inputs) n.in.push_back(slot_of(t));
    n.out = slot_of(out);
    n.attr_c = attr_c;
    n.attr_i = attr_i;
    n.saved = std::move(saved);
    run_node(n);
    if (debug_checks) check_finite(n);
    nodes_.push_back(std::move(n));
    return out;
}

void Graph::check_finite(const Node& n) const {
    for (double v : slots_[static_cast<size_t>(n.out)]->values) {
        if (!std::isfinite(v))
            throw Error::numeric(std::string("non-finite value produced by op '") +
                                 op_name(n.kind) + "'");
    }
}

void Graph::run_node(const Node& n) {
    auto in = [&](size_t i) -> Tensor& { return *slots_[static_cast<size_t>(n.in[i])]; };
    Tensor& out = *slots_[static_cast<size_t>(n.out)];

    switch (n.kind) {
        case OpKind::matmul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            MatShape sa = as_lhs(a);
            MatShape sb = as_rhs(b);
            for (int i = 0; i < sa.r; ++i) {
                for (int j = 0; j < sb.c; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < sa.c; ++k)
                        s += a.values[static_cast<size_t>(i * sa.c + k)] *
                             b.values[static_cast<size_t>(k * sb.c + j)];
                    out.values[static_cast<size_t>(i * sb.c + j)] = s;
                }
            }
            break;
        }
        case OpKind::add: {
            std::fill(out.values.begin(), out.values.end(), 0.0);
            for (size_t t = 0; t < n.in.size(); ++t)
                for (size_t i = 0; i < out.size(); ++i) out.values[i] += in(t).values[i];
            break;
        }
        case OpKind::tanh_: {
            for (size_t i = 0; i < out.size(); ++i) out.values[i] = std::tanh(in(0).values[i]);
            break;
        }
        case OpKind::sigmoid: {
            for (size_t i = 0; i < out.size(); ++i) out.values[i] = stable_sigmoid(in(0).values[i]);
            break;
        }
        case OpKind::softmax: {
            const Tensor& x = in(0);
            int rows = x.rows(), cols = x.cols();
            for (int r = 0; r < rows; ++r) {
                const double* xr = x.values.data() + static_cast<size_t>(r) * cols;
                double* yr = out.values.data() + static_cast<size_t>(r) * cols;
                double m = xr[0];
                for (int j = 1; j < cols; ++j) m = std::max(m, xr[j]);
                double z = 0.0;
                for (int j = 0; j < cols; ++j) {
                    yr[j] = std::exp(xr[j] - m);
                    z += yr[j];
                }
                for (int j = 0; j < cols; ++j) yr[j] /= z;
            }
            break;
        }
        case OpKind::concat: {
            size_t off = 0;
            for (size_t t = 0; t < n.in.size(); ++t) {
                const Tensor& x = in(t);
                std::memcpy(out.values.data() + off, x.values.data(),
                            x.size() * sizeof(double));
                off += x.size();
            }
            break;
        }
        case OpKind::dropout: {
            for (size_t i = 0; i < out.size(); ++i)
                out.values[i] = in(0).values[i] * n.saved[i];
            break;
        }
        case OpKind::scale: {
            for (size_t i = 0; i < out.size(); ++i) out.values[i] = n.attr_c * in(0).values[i];
            break;
        }
        case OpKind::mul: {
            for (size_t i = 0; i < out.size(); ++i)
                out.values[i] = in(0).values[i] * in(1).values[i];
            break;
        }
        case OpKind::relu: {
            for (size_t i = 0; i < out.size(); ++i)
                out.values[i] = in(0).values[i] > 0.0 ? in(0).values[i] : 0.0;
            break;
        }
        case OpKind::sum: {
            double s = 0.0;
            for (double v : in(0).values) s += v;
            out.values[0] = s;
            break;
        }
        case OpKind::cosine: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            double na = norm(a.values), nb = norm(b.values);
            if (na == 0.0 || nb == 0.0)
                throw Error::numeric("cosine similarity: degenerate vector (zero norm)");
            out.values[0] = dot(a.values, b.values) / (na * nb);
            break;
        }
        case OpKind::bce_loss: {
            const Tensor& p = in(0);
            double loss = 0.0;
            for (int j = 0; j < static_cast<int>(p.size()); ++j) {
                double q = clamp_prob(p.values[static_cast<size_t>(j)]);
                loss += (j == n.attr_i) ? -std::log(q) : -std::log(1.0 - q);
            }
            out.values[0] = loss;
            break;
        }
        case OpKind::softmax_ce_loss: {
            const Tensor& z = in(0);
            double m = z.values[0];
            for (double v : z.values) m = std::max(m, v);
            double lse = 0.0;
            for (double v : z.values) lse += std::exp(v - m);
            out.values[0] = m + std::log(lse) - z.values[static_cast<size_t>(n.attr_i)];
            break;
        }
    }
}

// ---- op construction ------------------------------------------------------

static void require_same_shape(OpKind kind, const std::vector<TensorPtr>& xs) {
    for (size_t i = 1; i < xs.size(); ++i) {
        if (xs[i]->shape != xs[0]->shape)
            throw Error::data(std::string("op '") + op_name(kind) + "': shape mismatch " +
                              shape_str(xs[0]->shape) + " vs " + shape_str(xs[i]->shape));
    }
}

TensorPtr Graph::matmul(const TensorPtr& a, const TensorPtr& b) {
    MatShape sa = as_lhs(*a);
    MatShape sb = as_rhs(*b);
    if (sa.c != sb.r)
        throw Error::data("op 'matmul': shape mismatch " + shape_str(a->shape) + " vs " +
                          shape_str(b->shape));
    std::vector<int> oshape;
    if (sa.promoted_row && sb.promoted_col) oshape = {1};
    else if (sa.promoted_row) oshape = {sb.c};
    else if (sb.promoted_col) oshape = {sa.r};
    else oshape = {sa.r, sb.c};
    return emit(OpKind::matmul, {a, b}, zeros(oshape));
}

TensorPtr Graph::add(const std::vector<TensorPtr>& xs) {
    if (xs.empty()) throw Error::usage("op 'add': needs at least one input");
    require_same_shape(OpKind::add, xs);
    return emit(OpKind::add, xs, zeros(xs[0]->shape));
}

TensorPtr Graph::add(const TensorPtr& a, const TensorPtr& b) { return add(std::vector<TensorPtr>{a, b}); }

TensorPtr Graph::tanh(const TensorPtr& x) { return emit(OpKind::tanh_, {x}, zeros(x->shape)); }

TensorPtr Graph::sigmoid(const TensorPtr& x) { return emit(OpKind::sigmoid, {x}, zeros(x->shape)); }

TensorPtr Graph::softmax(const TensorPtr& x) { return emit(OpKind::softmax, {x}, zeros(x->shape)); }

TensorPtr Graph::concat(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) throw Error::usage("op 'concat': needs at least one input");
    for (const auto& r : rows)
        if (r->rank() != 1)
            throw Error::data("op 'concat': inputs must be vectors, got " + shape_str(r->shape));
    require_same_shape(OpKind::concat, rows);
    int k = static_cast<int>(rows.size());
    int n = rows[0]->shape[0];
    std::vector<int> oshape = (n == 1) ? std::vector<int>{k} : std::vector<int>{k, n};
    return emit(OpKind::concat, rows, zeros(oshape));
}

TensorPtr Graph::dropout(const TensorPtr& x, double keep, Rng& rng, bool train) {
    if (!(keep > 0.0 && keep <= 1.0))
        throw Error::usage("op 'dropout': keep probability must be in (0,1], got " +
                           std::to_string(keep));
    std::vector<double> mask(x->size(), 1.0);
    if (train && keep < 1.0) {
        for (double& m : mask) m = (rng.uniform01() < keep) ? 1.0 / keep : 0.0;
    }
    return emit(OpKind::dropout, {x}, zeros(x->shape), keep, 0, std::move(mask));
}

TensorPtr Graph::scale(const TensorPtr& x, double c) {
    return emit(OpKind::scale, {x}, zeros(x->shape), c);
}

TensorPtr Graph::mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(OpKind::mul, {a, b});
    return emit(OpKind::mul, {a, b}, zeros(a->shape));
}

TensorPtr Graph::relu(const TensorPtr& x) { return emit(OpKind::relu, {x}, zeros(x->shape)); }

TensorPtr Graph::sum(const TensorPtr& x) { return emit(OpKind::sum, {x}, zeros({1})); }

TensorPtr Graph::cosine(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 1 || b->rank() != 1 || a->shape != b->shape)
        throw Error::data("op 'cosine': shape mismatch " + shape_str(a->shape) + " vs " +
                          shape_str(b->shape));
    return emit(OpKind::cosine, {a, b}, zeros({1}));
}

TensorPtr Graph::bce_loss(const TensorPtr& scores, int target) {
    if (scores->rank() != 1)
        throw Error::data("op 'bce_loss': scores must be a vector, got " + shape_str(scores->shape));
    if (target < 0 || target >= scores->shape[0])
        throw Error::usage("op 'bce_loss': target class " + std::to_string(target) +
                           " out of range for " + std::to_string(scores->shape[0]) + " classes");
    return emit(OpKind::bce_loss, {scores}, zeros({1}), 0.0, target);
}

TensorPtr Graph::softmax_ce_loss(const TensorPtr& logits, int target) {
    if (logits->rank() != 1)
        throw Error::data("op 'softmax_ce_loss': logits must be a vector, got " +
                          shape_str(logits->shape));
    if (target < 0 || target >= logits->shape[0])
        throw Error::usage("op 'softmax_ce_loss': target class " + std::to_string(target) +
                           " out of range for " + std::to_string(logits->shape[0]) + " classes");
    return emit(OpKind::softmax_ce_loss, {logits}, zeros({1}), 0.0, target);
}

TensorPtr Graph::apply(OpKind kind, const std::vector<TensorPtr>& inputs) {
    switch (kind) {
        case OpKind::matmul: return matmul(inputs.at(0), inputs.at(1));
        case OpKind::add: return add(inputs);
        case OpKind::tanh_: return tanh(inputs.at(0));
        case OpKind::sigmoid: return sigmoid(inputs.at(0));
        case OpKind::softmax: return softmax(inputs.at(0));
        case OpKind::concat: return concat(inputs);
        case OpKind::mul: return mul(inputs.at(0), inputs.at(1));
        case OpKind::relu: return relu(inputs.at(0));
        case OpKind::sum: return sum(inputs.at(0));
        case OpKind::cosine: return cosine(inputs.at(0), inputs.at(1));
        default:
            throw Error::usage(std::string("apply: op '") + op_name(kind) +
                               "' takes attributes; call its method directly");
    }
}

TensorPtr Graph::constant(double v) {
    auto t = make_scalar(v);
    slot_of(t);
    return t;
}

void Graph::replay() {
    for (const Node& n : nodes_) run_node(n);
}

// ---- backward --------------------------------------------------------------

void Graph::backward(const TensorPtr& loss) {
    auto it = slot_index_.find(loss.get());
    if (it == slot_index_.end())
        throw Error::usage("reverse_accumulate: loss tensor is not part of this graph");
    if (!loss->is_scalar())
        throw Error::usage("reverse_accumulate: loss is not scalar, shape " +
                           shape_str(loss->shape));

    std::vector<std::vector<double>> adj(slots_.size());
    auto ensure = [&](int slot) -> std::vector<double>& {
        auto& a = adj[static_cast<size_t>(slot)];
        if (a.empty()) a.assign(slots_[static_cast<size_t>(slot)]->size(), 0.0);
        return a;
    };
    ensure(it->second)[0] = 1.0;

    for (auto nit = nodes_.rbegin(); nit != nodes_.rend(); ++nit) {
        const Node& n = *nit;
        const auto& dy = adj[static_cast<size_t>(n.out)];
        if (dy.empty()) continue;  // not on the loss path
        const Tensor& out = *slots_[static_cast<size_t>(n.out)];
        auto in_t = [&](size_t i) -> const Tensor& {
            return *slots_[static_cast<size_t>(n.in[i])];
        };

        switch (n.kind) {
            case OpKind::matmul: {
                const Tensor& a = in_t(0);
                const Tensor& b = in_t(1);
                MatShape sa = as_lhs(a);
                MatShape sb = as_rhs(b);
                auto& da = ensure(n.in[0]);
                auto& db = ensure(n.in[1]);
                // dA = dC B^T ; dB = A^T dC  (2-D views of the flat arrays)
                for (int i = 0; i < sa.r; ++i)
                    for (int k = 0; k < sa.c; ++k) {
                        double s = 0.0;
                        for (int j = 0; j < sb.c; ++j)
                            s += dy[static_cast<size_t>(i * sb.c + j)] *
                                 b.values[static_cast<size_t>(k * sb.c + j)];
                        da[static_cast<size_t>(i * sa.c + k)] += s;
                    }
                for (int k = 0; k < sb.r; ++k)
                    for (int j = 0; j < sb.c; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < sa.r; ++i)
                            s += a.values[static_cast<size_t>(i * sa.c + k)] *
                                 dy[static_cast<size_t>(i * sb.c + j)];
                        db[static_cast<size_t>(k * sb.c + j)] += s;
                    }
                break;
            }
            case OpKind::add: {
                for (size_t t = 0; t < n.in.size(); ++t) {
                    auto& dx = ensure(n.in[t]);
                    for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
                }
                break;
            }
            case OpKind::tanh_: {
                auto& dx = ensure(n.in[0]);
                for (size_t i = 0; i < dy.size(); ++i)
                    dx[i] += dy[i] * (1.0 - out.values[i] * out.values[i]);
                break;
            }
            case OpKind::sigmoid: {
                auto& dx = ensure(n.in[0]);
                for (size_t i = 0; i < dy.size(); ++i)
                    dx[i] += dy[i] * out.values[i] * (1.0 - out.values[i]);
                break;
            }
            case OpKind::softmax: {
                auto& dx = ensure(n.in[0]);
                int rows = out.rows(), cols = out.cols();
                for (int r = 0; r < rows; ++r) {
                    const double* yr = out.values.data() + static_cast<size_t>(r) * cols;
                    const double* gr = dy.data() + static_cast<size_t>(r) * cols;
                    double inner = 0.0;
                    for (int j = 0; j < cols; ++j) inner += gr[j] * yr[j];
                    for (int j = 0; j < cols; ++j)
                        dx[static_cast<size_t>(r * cols + j)] += yr[j] * (gr[j] - inner);
                }
                break;
            }
            case OpKind::concat: {
                size_t off = 0;
                for (size_t t = 0; t < n.in.size(); ++t) {
                    auto& dx = ensure(n.in[t]);
                    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy[off + i];
                    off += dx.size();
                }
                break;
            }
            case OpKind::dropout: {
                auto& dx = ensure(n.in[0]);
                for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * n.saved[i];
                break;
            }
            case OpKind::scale: {
                auto& dx = ensure(n.in[0]);
                for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * n.attr_c;
                break;
            }
            case OpKind::mul: {
                auto& da = ensure(n.in[0]);
                auto& db = ensure(n.in[1]);
                const Tensor& a = in_t(0);
                const Tensor& b = in_t(1);
                for (size_t i = 0; i < dy.size(); ++i) {
                    da[i] += dy[i] * b.values[i];
                    db[i] += dy[i] * a.values[i];
                }
                break;
            }
            case OpKind::relu: {
                auto& dx = ensure(n.in[0]);
                const Tensor& x = in_t(0);
                for (size_t i = 0; i < dy.size(); ++i)
                    if (x.values[i] > 0.0) dx[i] += dy[i];
                break;
            }
            case OpKind::sum: {
                auto& dx = ensure(n.in[0]);
                for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy[0];
                break;
            }
            case OpKind::cosine: {
                const Tensor& a = in_t(0);
                const Tensor& b = in_t(1);
                auto& da = ensure(n.in[0]);
                auto& db = ensure(n.in[1]);
                double na = norm(a.values), nb = norm(b.values);
                double s = out.values[0];
                double g = dy[0];
                for (size_t i = 0; i < a.size(); ++i) {
                    da[i] += g * (b.values[i] / (na * nb) - s * a.values[i] / (na * na));
                    db[i] += g * (a.values[i] / (na * nb) - s * b.values[i] / (nb * nb));
                }
                break;
            }
            case OpKind::bce_loss: {
                const Tensor& p = in_t(0);
                auto& dp = ensure(n.in[0]);
                for (int j = 0; j < static_cast<int>(p.size()); ++j) {
                    double raw = p.values[static_cast<size_t>(j)];
                    if (raw < kProbClamp || raw > 1.0 - kProbClamp) continue;  // clamped flat
                    dp[static_cast<size_t>(j)] +=
                        dy[0] * ((j == n.attr_i) ? -1.0 / raw : 1.0 / (1.0 - raw));
                }
                break;
            }
            case OpKind::softmax_ce_loss: {
                const Tensor& z = in_t(0);
                auto& dz = ensure(n.in[0]);
                double m = z.values[0];
                for (double v : z.values) m = std::max(m, v);
                double lse = 0.0;
                for (double v : z.values) lse += std::exp(v - m);
                for (int j = 0; j < static_cast<int>(z.size()); ++j) {
                    double soft = std::exp(z.values[static_cast<size_t>(j)] - m) / lse;
                    dz[static_cast<size_t>(j)] += dy[0] * (soft - (j == n.attr_i ? 1.0 : 0.0));
                }
                break;
            }
        }
    }

    for (size_t s = 0; s < slots_.size(); ++s) {
        Tensor& t = *slots_[s];
        if (!t.requires_grad || adj[s].empty()) continue;
        for (size_t i = 0; i < t.size(); ++i) t.grad[i] += adj[s][i];
    }
}

void reverse_accumulate(Graph& graph, const TensorPtr& loss) { graph.backward(loss); }

// ---- finite differences -----------------------------------------------------

static double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double finite_difference_check(const std::function<double(bool)>& eval,
                               const std::vector<TensorPtr>& params, double eps) {
    if (eps <= 0.0) throw Error::usage("finite_difference_check: eps must be > 0");
    for (const auto& p : params) p->zero_grad();
    double base = eval(true);
    if (!std::isfinite(base))
        throw Error::numeric("finite_difference_check: non-finite loss");

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    double max_err = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (size_t k = 0; k < p.size(); ++k) {
            double orig = p.values[k];
            p.values[k] = orig + eps;
            double fp = eval(false);
            p.values[k] = orig - eps;
            double fm = eval(false);
            p.values[k] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw Error::numeric("finite_difference_check: non-finite loss");
            double numeric = (fp - fm) / (2.0 * eps);
            max_err = std::max(max_err, rel_err(analytic[pi][k], numeric));
        }
    }
    return max_err;
}

double finite_difference_check_replay(Graph& graph, const TensorPtr& loss,
                                      const std::vector<TensorPtr>& params,
                                      double eps) {
    if (eps <= 0.0) throw Error::usage("finite_difference_check: eps must be > 0");
    if (!std::isfinite(loss->values[0]))
        throw Error::numeric("finite_difference_check: non-finite loss");
    for (const auto& p : params) p->zero_grad();
    graph.backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    double max_err = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (size_t k = 0; k < p.size(); ++k) {
            double orig = p.values[k];
            p.values[k] = orig + eps;
            graph.replay();
            double fp = loss->values[0];
            p.values[k] = orig - eps;
            graph.replay();
            double fm = loss->values[0];
            p.values[k] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw Error::numeric("finite_difference_check: non-finite loss");
            double numeric = (fp - fm) / (2.0 * eps);
            max_err = std::max(max_err, rel_err(analytic[pi][k], numeric));
        }
    }
    graph.replay();  // restore forward values
    return max_err;
}

}  // namespace a2v
