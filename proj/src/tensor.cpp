#include "a2v/tensor.hpp"

#include <cmath>
#include <sstream>

namespace a2v {

static size_t shape_product(const std::vector<int>& shape) {
    size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw Error::usage("tensor shape has non-positive extent " + shape_str(shape));
        n *= static_cast<size_t>(e);
    }
    return n;
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values,
                      bool requires_grad) {
    if (shape.empty() || shape.size() > 2)
        throw Error::usage("tensor rank must be 1 or 2, got shape " + shape_str(shape));
    if (shape_product(shape) != values.size())
        throw Error::usage("tensor shape " + shape_str(shape) + " does not match " +
                           std::to_string(values.size()) + " values");
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->values = std::move(values);
    t->requires_grad = requires_grad;
    if (requires_grad) t->grad.assign(t->values.size(), 0.0);
    return t;
}

TensorPtr make_vector(std::vector<double> values, bool requires_grad) {
    int n = static_cast<int>(values.size());
    return make_tensor({n}, std::move(values), requires_grad);
}

TensorPtr make_scalar(double v, bool requires_grad) {
    return make_tensor({1}, {v}, requires_grad);
}

TensorPtr zeros(std::vector<int> shape, bool requires_grad) {
    size_t n = shape_product(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw Error::usage("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

double cosine_similarity_values(const std::vector<double>& a,
                                const std::vector<double>& b) {
    double na = norm(a);
    double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        throw Error::numeric("cosine similarity: degenerate vector (zero norm)");
    return dot(a, b) / (na * nb);
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
    double n = norm(v);
    if (n == 0.0) throw Error::numeric("l2_normalize: zero vector");
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

}  // namespace a2v
