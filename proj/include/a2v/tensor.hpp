#ifndef A2V_TENSOR_HPP_
#define A2V_TENSOR_HPP_

#include <memory>
#include <string>
#include <vector>

#include "a2v/error.hpp"

namespace a2v {

// Dense row-major 64-bit tensor, rank 1 or 2. Values are written once by the
// op that produces the tensor; grad is touched only by reverse accumulation.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // sized like values iff requires_grad

    size_t size() const { return values.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    // rows/cols view: rank-1 tensors count as a single row
    int rows() const { return rank() == 2 ? shape[0] : 1; }
    int cols() const { return rank() == 2 ? shape[1] : shape[0]; }

    bool is_scalar() const { return size() == 1; }

    void zero_grad() {
        if (requires_grad) std::fill(grad.begin(), grad.end(), 0.0);
    }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr make_vector(std::vector<double> values, bool requires_grad = false);
TensorPtr make_scalar(double v, bool requires_grad = false);
TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);

std::string shape_str(const std::vector<int>& shape);

// Plain-value helpers shared by evaluation code (no graph involvement).
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& v);

// a.b / (|a||b|); throws numeric error on a zero-norm input.
double cosine_similarity_values(const std::vector<double>& a,
                                const std::vector<double>& b);

// Unit-norm copy; throws numeric error on the zero vector.
std::vector<double> l2_normalize(const std::vector<double>& v);

}  // namespace a2v

#endif  // A2V_TENSOR_HPP_
