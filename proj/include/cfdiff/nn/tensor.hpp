#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cfdiff::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One whole-tensor operation on the reverse-mode tape. `backward` reads
// this node's grad and accumulates into the parents' grads.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward;

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantics handle on a tape node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double fill, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> data() const { return node_->value; }
    // direct mutation; only meaningful before the tensor participates in a graph
    std::span<double> mutable_data() { return node_->value; }

    std::span<const double> grad() const { return node_->grad; }
    void zero_grad() {
        if (node_) node_->grad.assign(node_->value.size(), 0.0);
    }

    double item() const;  // scalar tensors only

    NodePtr node() const { return node_; }
    static Tensor wrap(NodePtr n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

private:
    NodePtr node_;
};

// Reverse sweep from a scalar root: grad(root) = 1, then parents in
// reverse topological order.
void backward(const Tensor& root);

// ---- elementwise / structural ops (all recorded on the tape) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);

// a: [m, n], v: [n]; adds v to every row
Tensor add_rowvec(const Tensor& a, const Tensor& v);

// [m, k] x [k, n] -> [m, n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);  // 2-D
Tensor slice_rows(const Tensor& a, std::size_t row0, std::size_t nrows);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

// rows of `table` selected by index; duplicates accumulate gradient
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx);

// row-wise softmax on [m, n]
Tensor softmax_rows(const Tensor& a);

// scaled per-head dot products: q [n_q, d], k [n_kv, d], d = heads*head_dim
// -> scores [heads*n_q, n_kv], scaled by 1/sqrt(head_dim)
Tensor multihead_scores(const Tensor& q, const Tensor& k, int heads);

// weights [heads*n_q, n_kv] x v [n_kv, d] -> [n_q, d] with per-head blocks
Tensor multihead_mix(const Tensor& weights, const Tensor& v, int heads);

// input [B, C, H, W], kernels [F, C, k, k] -> [B, F, H', W']
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);

Tensor sum_all(const Tensor& a);   // -> scalar [1]
Tensor mean_all(const Tensor& a);  // -> scalar [1]

// mean over rows of ||pred_b - target_b||^2 / ||target_b||^2.
// target carries no gradient.
Tensor normalized_sq_error(const Tensor& pred, const Tensor& target);

// raw (non-tape) matmul kernel shared with oracles and inference paths
void matmul_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n, bool accumulate = false);

}  // namespace cfdiff::nn
