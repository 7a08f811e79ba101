#include "cfdiff/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cfdiff/error.hpp"

namespace cfdiff::nn {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

NodePtr make_node(Shape shape, std::vector<double> value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

bool any_grad(const Tensor& a) { return a.requires_grad(); }
bool any_grad(const Tensor& a, const Tensor& b) { return a.requires_grad() || b.requires_grad(); }

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = numel(shape);
    return wrap(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
    auto n = numel(shape);
    return wrap(make_node(std::move(shape), std::vector<double>(n, fill), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    if (numel(shape) != data.size()) {
        throw DimensionError("Tensor::from: shape " + shape_str(shape) + " needs " +
                             std::to_string(numel(shape)) + " values, got " +
                             std::to_string(data.size()));
    }
    return wrap(make_node(std::move(shape), std::move(data), requires_grad));
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item(): tensor has shape " + shape_str(shape()) + ", expected [1]");
    }
    return node_->value[0];
}

void backward(const Tensor& root) {
    if (!root.defined() || root.size() != 1) {
        throw DimensionError("backward(): root must be a defined scalar tensor");
    }
    // iterative post-order DFS over grad-requiring nodes
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (root.node()->requires_grad) stack.push_back({root.node().get(), 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent == 0) {
            if (visited.count(f.node)) {
                stack.pop_back();
                continue;
            }
            visited.insert(f.node);
        }
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    root.node()->ensure_grad();
    root.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->backward) continue;
        for (auto& p : n->parents) {
            if (p->requires_grad) p->ensure_grad();
        }
        n->backward(*n);
    }
}

// ---- raw kernels ----

void matmul_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

namespace {

// c [m,n] (+)= a [m,k] * b^T where b is [n,k]
void matmul_nt_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

// c [m,n] (+)= a^T * b where a is [k,m], b is [k,n]
void matmul_tn_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i];
    auto out = make_node(a.shape(), std::move(v), any_grad(a, b));
    if (out->requires_grad) {
        out->parents = {a.node(), b.node()};
        out->backward = [](Node& n) {
            for (auto& p : n.parents) {
                if (!p->requires_grad) continue;
                for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] - b.data()[i];
    auto out = make_node(a.shape(), std::move(v), any_grad(a, b));
    if (out->requires_grad) {
        out->parents = {a.node(), b.node()};
        out->backward = [](Node& n) {
            auto& pa = n.parents[0];
            auto& pb = n.parents[1];
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] -= n.grad[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
    auto out = make_node(a.shape(), std::move(v), any_grad(a, b));
    if (out->requires_grad) {
        out->parents = {a.node(), b.node()};
        out->backward = [](Node& n) {
            auto& pa = n.parents[0];
            auto& pb = n.parents[1];
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.grad[i] * pb->value[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pb->grad[i] += n.grad[i] * pa->value[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * s;
    auto out = make_node(a.shape(), std::move(v), any_grad(a));
    if (out->requires_grad) {
        out->parents = {a.node()};
        out->backward = [s](Node& n) {
            auto& p = n.parents[0];
            for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i] * s;
        };
    }
    return Tensor::wrap(out);
}

Tensor relu(const Tensor& a) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    auto out = make_node(a.shape(), std::move(v), any_grad(a));
    if (out->requires_grad) {
        out->parents = {a.node()};
        // subgradient at 0 is 0
        out->backward = [](Node& n) {
            auto& p = n.parents[0];
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                if (p->value[i] > 0.0) p->grad[i] += n.grad[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    if (a.shape().size() != 2 || v.shape().size() != 1 || a.shape()[1] != v.shape()[0]) {
        throw DimensionError("add_rowvec: got " + shape_str(a.shape()) + " and " +
                             shape_str(v.shape()));
    }
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.data()[i * n + j] + v.data()[j];
    auto node = make_node(a.shape(), std::move(out), any_grad(a, v));
    if (node->requires_grad) {
        node->parents = {a.node(), v.node()};
        node->backward = [m, n](Node& nd) {
            auto& pa = nd.parents[0];
            auto& pv = nd.parents[1];
            if (pa->requires_grad)
                for (std::size_t i = 0; i < m * n; ++i) pa->grad[i] += nd.grad[i];
            if (pv->requires_grad)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) pv->grad[j] += nd.grad[i * n + j];
        };
    }
    return Tensor::wrap(node);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> v(m * n);
    matmul_raw(a.data().data(), b.data().data(), v.data(), m, k, n);
    auto node = make_node({m, n}, std::move(v), any_grad(a, b));
    if (node->requires_grad) {
        node->parents = {a.node(), b.node()};
        node->backward = [m, k, n](Node& nd) {
            auto& pa = nd.parents[0];
            auto& pb = nd.parents[1];
            if (pa->requires_grad)  // dA += dC * B^T
                matmul_nt_raw(nd.grad.data(), pb->value.data(), pa->grad.data(), m, n, k, true);
            if (pb->requires_grad)  // dB += A^T * dC
                matmul_tn_raw(pa->value.data(), nd.grad.data(), pb->grad.data(), k, m, n, true);
        };
    }
    return Tensor::wrap(node);
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size()) {
        throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                             " changes element count");
    }
    std::vector<double> v(a.data().begin(), a.data().end());
    auto node = make_node(std::move(shape), std::move(v), any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [](Node& nd) {
            auto& p = nd.parents[0];
            for (std::size_t i = 0; i < nd.grad.size(); ++i) p->grad[i] += nd.grad[i];
        };
    }
    return Tensor::wrap(node);
}

Tensor transpose(const Tensor& a) {
    if (a.shape().size() != 2) throw DimensionError("transpose: need 2-D, got " + shape_str(a.shape()));
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a.data()[i * n + j];
    auto node = make_node({n, m}, std::move(v), any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [m, n](Node& nd) {
            auto& p = nd.parents[0];
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) p->grad[i * n + j] += nd.grad[j * m + i];
        };
    }
    return Tensor::wrap(node);
}

Tensor slice_rows(const Tensor& a, std::size_t row0, std::size_t nrows) {
    if (a.shape().size() != 2 || row0 + nrows > a.shape()[0]) {
        throw DimensionError("slice_rows: rows [" + std::to_string(row0) + ", " +
                             std::to_string(row0 + nrows) + ") out of " + shape_str(a.shape()));
    }
    const std::size_t n = a.shape()[1];
    std::vector<double> v(a.data().begin() + row0 * n, a.data().begin() + (row0 + nrows) * n);
    auto node = make_node({nrows, n}, std::move(v), any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [row0, n](Node& nd) {
            auto& p = nd.parents[0];
            for (std::size_t i = 0; i < nd.grad.size(); ++i) p->grad[row0 * n + i] += nd.grad[i];
        };
    }
    return Tensor::wrap(node);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    const std::size_t n = parts[0].shape()[1];
    std::size_t rows = 0;
    bool grad = false;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.shape()[1] != n)
            throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
        rows += p.shape()[0];
        grad = grad || p.requires_grad();
    }
    std::vector<double> v;
    v.reserve(rows * n);
    for (const auto& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
    auto node = make_node({rows, n}, std::move(v), grad);
    if (grad) {
        for (const auto& p : parts) node->parents.push_back(p.node());
        node->backward = [](Node& nd) {
            std::size_t off = 0;
            for (auto& p : nd.parents) {
                const std::size_t sz = p->value.size();
                if (p->requires_grad)
                    for (std::size_t i = 0; i < sz; ++i) p->grad[i] += nd.grad[off + i];
                off += sz;
            }
        };
    }
    return Tensor::wrap(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const std::size_t m = parts[0].shape()[0];
    std::size_t cols = 0;
    bool grad = false;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.shape()[0] != m)
            throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
        cols += p.shape()[1];
        grad = grad || p.requires_grad();
    }
    std::vector<double> v(m * cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t pn = p.shape()[1];
        for (std::size_t i = 0; i < m; ++i)
            std::copy(p.data().begin() + i * pn, p.data().begin() + (i + 1) * pn,
                      v.begin() + i * cols + off);
        off += pn;
    }
    auto node = make_node({m, cols}, std::move(v), grad);
    if (grad) {
        std::vector<std::size_t> widths;
        for (const auto& p : parts) {
            node->parents.push_back(p.node());
            widths.push_back(p.shape()[1]);
        }
        node->backward = [m, cols, widths](Node& nd) {
            std::size_t off2 = 0;
            for (std::size_t pi = 0; pi < nd.parents.size(); ++pi) {
                auto& p = nd.parents[pi];
                const std::size_t pn = widths[pi];
                if (p->requires_grad) {
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < pn; ++j)
                            p->grad[i * pn + j] += nd.grad[i * cols + off2 + j];
                }
                off2 += pn;
            }
        };
    }
    return Tensor::wrap(node);
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx) {
    if (table.shape().size() != 2) {
        throw DimensionError("gather_rows: table must be 2-D, got " + shape_str(table.shape()));
    }
    const std::size_t rows = table.shape()[0], n = table.shape()[1];
    for (auto i : idx)
        if (i >= rows)
            throw DimensionError("gather_rows: index " + std::to_string(i) + " out of " +
                                 std::to_string(rows) + " rows");
    std::vector<double> v(idx.size() * n);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(table.data().begin() + idx[r] * n, table.data().begin() + (idx[r] + 1) * n,
                  v.begin() + r * n);
    auto node = make_node({idx.size(), n}, std::move(v), any_grad(table));
    if (node->requires_grad) {
        node->parents = {table.node()};
        node->backward = [idx, n](Node& nd) {
            auto& p = nd.parents[0];
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t j = 0; j < n; ++j) p->grad[idx[r] * n + j] += nd.grad[r * n + j];
        };
    }
    return Tensor::wrap(node);
}

Tensor softmax_rows(const Tensor& a) {
    if (a.shape().size() != 2) throw DimensionError("softmax_rows: need 2-D, got " + shape_str(a.shape()));
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.data().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            v[i * n + j] = std::exp(row[j] - mx);
            sum += v[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] /= sum;
    }
    auto node = make_node(a.shape(), std::move(v), any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [m, n](Node& nd) {
            auto& p = nd.parents[0];
            for (std::size_t i = 0; i < m; ++i) {
                const double* y = nd.value.data() + i * n;
                const double* dy = nd.grad.data() + i * n;
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
                for (std::size_t j = 0; j < n; ++j) p->grad[i * n + j] += y[j] * (dy[j] - dot);
            }
        };
    }
    return Tensor::wrap(node);
}

Tensor multihead_scores(const Tensor& q, const Tensor& k, int heads) {
    if (q.shape().size() != 2 || k.shape().size() != 2 || q.shape()[1] != k.shape()[1]) {
        throw DimensionError("multihead_scores: got " + shape_str(q.shape()) + " and " +
                             shape_str(k.shape()));
    }
    const std::size_t d = q.shape()[1];
    if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0) {
        throw ConfigError("multihead_scores: model dim " + std::to_string(d) +
                          " not divisible by " + std::to_string(heads) + " heads");
    }
    const std::size_t nq = q.shape()[0], nkv = k.shape()[0];
    const std::size_t dh = d / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> v(heads * nq * nkv);
    for (int h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < nq; ++i) {
            const double* qrow = q.data().data() + i * d + h * dh;
            double* srow = v.data() + (h * nq + i) * nkv;
            for (std::size_t j = 0; j < nkv; ++j) {
                const double* krow = k.data().data() + j * d + h * dh;
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) s += qrow[c] * krow[c];
                srow[j] = s * inv;
            }
        }
    auto node = make_node({static_cast<std::size_t>(heads) * nq, nkv}, std::move(v), any_grad(q, k));
    if (node->requires_grad) {
        node->parents = {q.node(), k.node()};
        node->backward = [heads, nq, nkv, d, dh, inv](Node& nd) {
            auto& pq = nd.parents[0];
            auto& pk = nd.parents[1];
            for (int h = 0; h < heads; ++h)
                for (std::size_t i = 0; i < nq; ++i) {
                    const double* ds = nd.grad.data() + (h * nq + i) * nkv;
                    for (std::size_t j = 0; j < nkv; ++j) {
                        const double g = ds[j] * inv;
                        if (g == 0.0) continue;
                        const double* qrow = pq->value.data() + i * d + h * dh;
                        const double* krow = pk->value.data() + j * d + h * dh;
                        if (pq->requires_grad) {
                            double* dq = pq->grad.data() + i * d + h * dh;
                            for (std::size_t c = 0; c < dh; ++c) dq[c] += g * krow[c];
                        }
                        if (pk->requires_grad) {
                            double* dk = pk->grad.data() + j * d + h * dh;
                            for (std::size_t c = 0; c < dh; ++c) dk[c] += g * qrow[c];
                        }
                    }
                }
        };
    }
    return Tensor::wrap(node);
}

Tensor multihead_mix(const Tensor& weights, const Tensor& v, int heads) {
    if (weights.shape().size() != 2 || v.shape().size() != 2) {
        throw DimensionError("multihead_mix: got " + shape_str(weights.shape()) + " and " +
                             shape_str(v.shape()));
    }
    const std::size_t nkv = v.shape()[0], d = v.shape()[1];
    if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0 ||
        weights.shape()[0] % static_cast<std::size_t>(heads) != 0 || weights.shape()[1] != nkv) {
        throw DimensionError("multihead_mix: incompatible " + shape_str(weights.shape()) + " x " +
                             shape_str(v.shape()) + " with " + std::to_string(heads) + " heads");
    }
    const std::size_t nq = weights.shape()[0] / heads;
    const std::size_t dh = d / heads;
    std::vector<double> out(nq * d, 0.0);
    for (int h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < nq; ++i) {
            const double* wrow = weights.data().data() + (h * nq + i) * nkv;
            double* orow = out.data() + i * d + h * dh;
            for (std::size_t j = 0; j < nkv; ++j) {
                const double w = wrow[j];
                const double* vrow = v.data().data() + j * d + h * dh;
                for (std::size_t c = 0; c < dh; ++c) orow[c] += w * vrow[c];
            }
        }
    auto node = make_node({nq, d}, std::move(out), any_grad(weights, v));
    if (node->requires_grad) {
        node->parents = {weights.node(), v.node()};
        node->backward = [heads, nq, nkv, d, dh](Node& nd) {
            auto& pw = nd.parents[0];
            auto& pv = nd.parents[1];
            for (int h = 0; h < heads; ++h)
                for (std::size_t i = 0; i < nq; ++i) {
                    const double* dout = nd.grad.data() + i * d + h * dh;
                    for (std::size_t j = 0; j < nkv; ++j) {
                        if (pw->requires_grad) {
                            const double* vrow = pv->value.data() + j * d + h * dh;
                            double s = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) s += dout[c] * vrow[c];
                            pw->grad[(h * nq + i) * nkv + j] += s;
                        }
                        if (pv->requires_grad) {
                            const double w = pw->value[(h * nq + i) * nkv + j];
                            double* dv = pv->grad.data() + j * d + h * dh;
                            for (std::size_t c = 0; c < dh; ++c) dv[c] += w * dout[c];
                        }
                    }
                }
        };
    }
    return Tensor::wrap(node);
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.shape().size() != 4 || kernels.shape().size() != 4) {
        throw DimensionError("conv2d: need input [B,C,H,W] and kernels [F,C,k,k], got " +
                             shape_str(input.shape()) + " and " + shape_str(kernels.shape()));
    }
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
    const std::size_t B = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
                      W = input.shape()[3];
    const std::size_t F = kernels.shape()[0], KC = kernels.shape()[1], kh = kernels.shape()[2],
                      kw = kernels.shape()[3];
    if (KC != C || kh != kw) {
        throw DimensionError("conv2d: kernels " + shape_str(kernels.shape()) +
                             " do not match input channels " + std::to_string(C));
    }
    const std::size_t k = kh;
    if (k > H + 2 * static_cast<std::size_t>(padding) || k > W + 2 * static_cast<std::size_t>(padding)) {
        throw DimensionError("conv2d: kernel " + std::to_string(k) + " exceeds padded input " +
                             shape_str(input.shape()) + " with padding " + std::to_string(padding));
    }
    const std::size_t OH = (H + 2 * padding - k) / stride + 1;
    const std::size_t OW = (W + 2 * padding - k) / stride + 1;
    const std::size_t ckk = C * k * k;
    const std::size_t rows = B * OH * OW;

    // im2col; padded positions stay zero
    auto cols = std::make_shared<std::vector<double>>(rows * ckk, 0.0);
    {
        const double* in = input.data().data();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    double* crow = cols->data() + ((b * OH + oh) * OW + ow) * ckk;
                    const long h0 = static_cast<long>(oh) * stride - padding;
                    const long w0 = static_cast<long>(ow) * stride - padding;
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t r = 0; r < k; ++r) {
                            const long hi = h0 + static_cast<long>(r);
                            if (hi < 0 || hi >= static_cast<long>(H)) continue;
                            for (std::size_t s = 0; s < k; ++s) {
                                const long wi = w0 + static_cast<long>(s);
                                if (wi < 0 || wi >= static_cast<long>(W)) continue;
                                crow[(c * k + r) * k + s] =
                                    in[((b * C + c) * H + hi) * W + wi];
                            }
                        }
                }
    }

    // out_rows [rows, F] = cols * kernels^T, kernels viewed as [F, ckk]
    std::vector<double> out_rows(rows * F);
    matmul_nt_raw(cols->data(), kernels.data().data(), out_rows.data(), rows, ckk, F, false);

    // reorder to [B, F, OH, OW]
    std::vector<double> out(B * F * OH * OW);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t oh = 0; oh < OH; ++oh)
            for (std::size_t ow = 0; ow < OW; ++ow) {
                const double* r = out_rows.data() + ((b * OH + oh) * OW + ow) * F;
                for (std::size_t f = 0; f < F; ++f)
                    out[((b * F + f) * OH + oh) * OW + ow] = r[f];
            }

    auto node = make_node({B, F, OH, OW}, std::move(out), any_grad(input, kernels));
    if (node->requires_grad) {
        node->parents = {input.node(), kernels.node()};
        node->backward = [cols, B, C, H, W, F, k, OH, OW, ckk, rows, stride, padding](Node& nd) {
            auto& pin = nd.parents[0];
            auto& pker = nd.parents[1];
            // regroup dOut to [rows, F]
            std::vector<double> dout_rows(rows * F);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t oh = 0; oh < OH; ++oh)
                    for (std::size_t ow = 0; ow < OW; ++ow) {
                        double* r = dout_rows.data() + ((b * OH + oh) * OW + ow) * F;
                        for (std::size_t f = 0; f < F; ++f)
                            r[f] = nd.grad[((b * F + f) * OH + oh) * OW + ow];
                    }
            if (pker->requires_grad)  // dK [F, ckk] += dout_rows^T * cols
                matmul_tn_raw(dout_rows.data(), cols->data(), pker->grad.data(), F, rows, ckk,
                              true);
            if (pin->requires_grad) {
                // dCols = dout_rows * kernels [F, ckk]
                std::vector<double> dcols(rows * ckk);
                matmul_raw(dout_rows.data(), pker->value.data(), dcols.data(), rows, F, ckk);
                // col2im scatter-add
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t oh = 0; oh < OH; ++oh)
                        for (std::size_t ow = 0; ow < OW; ++ow) {
                            const double* crow = dcols.data() + ((b * OH + oh) * OW + ow) * ckk;
                            const long h0 = static_cast<long>(oh) * stride - padding;
                            const long w0 = static_cast<long>(ow) * stride - padding;
                            for (std::size_t c = 0; c < C; ++c)
                                for (std::size_t r = 0; r < k; ++r) {
                                    const long hi = h0 + static_cast<long>(r);
                                    if (hi < 0 || hi >= static_cast<long>(H)) continue;
                                    for (std::size_t s = 0; s < k; ++s) {
                                        const long wi = w0 + static_cast<long>(s);
                                        if (wi < 0 || wi >= static_cast<long>(W)) continue;
                                        pin->grad[((b * C + c) * H + hi) * W + wi] +=
                                            crow[(c * k + r) * k + s];
                                    }
                                }
                        }
            }
        };
    }
    return Tensor::wrap(node);
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    auto node = make_node({1}, {s}, any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [](Node& nd) {
            auto& p = nd.parents[0];
            const double g = nd.grad[0];
            for (auto& gi : p->grad) gi += g;
        };
    }
    return Tensor::wrap(node);
}

Tensor mean_all(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    double s = 0.0;
    for (double x : a.data()) s += x;
    auto node = make_node({1}, {s * inv}, any_grad(a));
    if (node->requires_grad) {
        node->parents = {a.node()};
        node->backward = [inv](Node& nd) {
            auto& p = nd.parents[0];
            const double g = nd.grad[0] * inv;
            for (auto& gi : p->grad) gi += g;
        };
    }
    return Tensor::wrap(node);
}

Tensor normalized_sq_error(const Tensor& pred, const Tensor& target) {
    check_same_shape("normalized_sq_error", pred, target);
    if (pred.shape().size() != 2) {
        throw DimensionError("normalized_sq_error: need [batch, n], got " +
                             shape_str(pred.shape()));
    }
    const std::size_t B = pred.shape()[0], n = pred.shape()[1];
    auto inv_norms = std::make_shared<std::vector<double>>(B);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* p = pred.data().data() + b * n;
        const double* t = target.data().data() + b * n;
        double se = 0.0, tn = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = p[j] - t[j];
            se += d * d;
            tn += t[j] * t[j];
        }
        if (tn == 0.0) {
            throw NumericError("normalized_sq_error: zero-norm target in row " + std::to_string(b));
        }
        (*inv_norms)[b] = 1.0 / tn;
        loss += se / tn;
    }
    loss /= static_cast<double>(B);
    auto node = make_node({1}, {loss}, any_grad(pred));
    if (node->requires_grad) {
        node->parents = {pred.node(), target.node()};
        node->backward = [inv_norms, B, n](Node& nd) {
            auto& pp = nd.parents[0];
            auto& pt = nd.parents[1];
            if (!pp->requires_grad) return;
            const double g = nd.grad[0] / static_cast<double>(B);
            for (std::size_t b = 0; b < B; ++b) {
                const double w = 2.0 * g * (*inv_norms)[b];
                for (std::size_t j = 0; j < n; ++j) {
                    pp->grad[b * n + j] += w * (pp->value[b * n + j] - pt->value[b * n + j]);
                }
            }
        };
    }
    return Tensor::wrap(node);
}

}  // namespace cfdiff::nn
