#include "cfdiff/nn/layers.hpp"

#include <cmath>

#include "cfdiff/error.hpp"

namespace cfdiff::nn {

ParameterPtr ParameterSet::add(const std::string& path, Tensor tensor) {
    if (find(path)) throw ConfigError("duplicate parameter path: " + path);
    tensor.node()->requires_grad = true;
    auto p = std::make_shared<Parameter>(path, std::move(tensor));
    params_.push_back(p);
    return p;
}

ParameterPtr ParameterSet::find(const std::string& path) const {
    for (const auto& p : params_)
        if (p->path == path) return p;
    return nullptr;
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->tensor.size();
    return n;
}

void ParameterSet::zero_grads() {
    for (const auto& p : params_) p->tensor.zero_grad();
}

void init_fan_in_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    auto data = t.mutable_data();
    for (auto& v : data) v = rng.uniform(-bound, bound);
}

// ---- Linear ----

Linear::Linear(ParameterSet& params, const std::string& path, std::size_t in_dim,
               std::size_t out_dim, Rng& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
    Tensor w = Tensor::zeros({in_dim, out_dim});
    init_fan_in_uniform(w, in_dim, rng);
    weight_ = params.add(path + ".weight", std::move(w));
    bias_ = params.add(path + ".bias", Tensor::zeros({out_dim}));
}

Tensor Linear::forward(const Tensor& input) const {
    if (input.shape().size() != 2 || input.shape()[1] != in_dim_) {
        throw DimensionError("Linear " + weight_->path + ": input " + shape_str(input.shape()) +
                             " vs weight " + shape_str(weight_->tensor.shape()));
    }
    return add_rowvec(matmul(input, weight_->tensor), bias_->tensor);
}

// ---- Conv2d ----

Conv2d::Conv2d(ParameterSet& params, const std::string& path, std::size_t ch_in,
               std::size_t ch_out, std::size_t kernel, int stride, int padding, Rng& rng)
    : ch_in_(ch_in), ch_out_(ch_out), kernel_(kernel), stride_(stride), padding_(padding) {
    Tensor k = Tensor::zeros({ch_out, ch_in, kernel, kernel});
    init_fan_in_uniform(k, ch_in * kernel * kernel, rng);
    kernels_ = params.add(path + ".kernels", std::move(k));
}

Tensor Conv2d::forward(const Tensor& input) const {
    if (input.shape().size() != 4 || input.shape()[1] != ch_in_) {
        throw DimensionError("Conv2d " + kernels_->path + ": input " + shape_str(input.shape()) +
                             " vs kernels " + shape_str(kernels_->tensor.shape()));
    }
    return conv2d(input, kernels_->tensor, stride_, padding_);
}

// ---- BatchNorm ----

BatchNorm::BatchNorm(ParameterSet& params, const std::string& path, std::size_t channels,
                     double eps, double momentum)
    : channels_(channels),
      eps_(eps),
      momentum_(momentum),
      running_mean_(channels, 0.0),
      running_var_(channels, 1.0) {
    gamma_ = params.add(path + ".gamma", Tensor::full({channels}, 1.0));
    beta_ = params.add(path + ".beta", Tensor::zeros({channels}));
}

Tensor BatchNorm::forward(const Tensor& input, bool training) {
    const auto& shape = input.shape();
    if ((shape.size() != 2 && shape.size() != 4) || shape[1] != channels_) {
        throw DimensionError("BatchNorm " + gamma_->path + ": input " + shape_str(shape) +
                             " vs " + std::to_string(channels_) + " channels");
    }
    const std::size_t B = shape[0];
    const std::size_t C = channels_;
    const std::size_t S = shape.size() == 4 ? shape[2] * shape[3] : 1;
    const std::size_t N = B * S;  // samples per channel
    if (training && B < 2) {
        throw InputError("BatchNorm " + gamma_->path + ": train mode needs batch >= 2, got " +
                         std::to_string(B));
    }

    std::vector<double> mean(C), inv_std(C);
    if (training) {
        std::vector<double> var(C, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
            double m = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* x = input.data().data() + (b * C + c) * S;
                for (std::size_t s = 0; s < S; ++s) m += x[s];
            }
            m /= static_cast<double>(N);
            double v = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* x = input.data().data() + (b * C + c) * S;
                for (std::size_t s = 0; s < S; ++s) {
                    const double d = x[s] - m;
                    v += d * d;
                }
            }
            v /= static_cast<double>(N);
            mean[c] = m;
            var[c] = v;
            inv_std[c] = 1.0 / std::sqrt(v + eps_);
        }
        // running statistics use the unbiased variance
        const double unbias = N > 1 ? static_cast<double>(N) / static_cast<double>(N - 1) : 1.0;
        for (std::size_t c = 0; c < C; ++c) {
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean[c];
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var[c] * unbias;
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = running_mean_[c];
            inv_std[c] = 1.0 / std::sqrt(running_var_[c] + eps_);
        }
    }

    auto xhat = std::make_shared<std::vector<double>>(input.size());
    std::vector<double> out(input.size());
    {
        const double* g = gamma_->tensor.data().data();
        const double* bt = beta_->tensor.data().data();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const double* x = input.data().data() + (b * C + c) * S;
                double* xh = xhat->data() + (b * C + c) * S;
                double* y = out.data() + (b * C + c) * S;
                for (std::size_t s = 0; s < S; ++s) {
                    xh[s] = (x[s] - mean[c]) * inv_std[c];
                    y[s] = g[c] * xh[s] + bt[c];
                }
            }
    }

    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value = std::move(out);
    node->requires_grad = input.requires_grad() || gamma_->tensor.requires_grad() ||
                          beta_->tensor.requires_grad();
    if (node->requires_grad) {
        node->parents = {input.node(), gamma_->tensor.node(), beta_->tensor.node()};
        node->backward = [xhat, inv_std, B, C, S, N, training](Node& nd) {
            auto& px = nd.parents[0];
            auto& pg = nd.parents[1];
            auto& pb = nd.parents[2];
            const double* gval = pg->value.data();
            for (std::size_t c = 0; c < C; ++c) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t b = 0; b < B; ++b) {
                    const double* dy = nd.grad.data() + (b * C + c) * S;
                    const double* xh = xhat->data() + (b * C + c) * S;
                    for (std::size_t s = 0; s < S; ++s) {
                        sum_dy += dy[s];
                        sum_dy_xhat += dy[s] * xh[s];
                    }
                }
                if (pg->requires_grad) pg->grad[c] += sum_dy_xhat;
                if (pb->requires_grad) pb->grad[c] += sum_dy;
                if (px->requires_grad) {
                    const double k = gval[c] * inv_std[c];
                    if (training) {
                        const double mdy = sum_dy / static_cast<double>(N);
                        const double mdyx = sum_dy_xhat / static_cast<double>(N);
                        for (std::size_t b = 0; b < B; ++b) {
                            const double* dy = nd.grad.data() + (b * C + c) * S;
                            const double* xh = xhat->data() + (b * C + c) * S;
                            double* dx = px->grad.data() + (b * C + c) * S;
                            for (std::size_t s = 0; s < S; ++s)
                                dx[s] += k * (dy[s] - mdy - xh[s] * mdyx);
                        }
                    } else {
                        for (std::size_t b = 0; b < B; ++b) {
                            const double* dy = nd.grad.data() + (b * C + c) * S;
                            double* dx = px->grad.data() + (b * C + c) * S;
                            for (std::size_t s = 0; s < S; ++s) dx[s] += k * dy[s];
                        }
                    }
                }
            }
        };
    }
    return Tensor::wrap(node);
}

// ---- MultiheadAttention ----

namespace {
std::size_t check_head_split(const std::string& path, std::size_t model_dim, int heads) {
    if (heads <= 0 || model_dim % static_cast<std::size_t>(heads) != 0) {
        throw ConfigError("MultiheadAttention " + path + ": model dim " +
                          std::to_string(model_dim) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    return model_dim;
}
}  // namespace

MultiheadAttention::MultiheadAttention(ParameterSet& params, const std::string& path,
                                       std::size_t model_dim, int heads, Rng& rng)
    : model_dim_(check_head_split(path, model_dim, heads)),
      heads_(heads),
      wq_(params, path + ".wq", model_dim, model_dim, rng),
      wk_(params, path + ".wk", model_dim, model_dim, rng),
      wv_(params, path + ".wv", model_dim, model_dim, rng),
      wo_(params, path + ".wo", model_dim, model_dim, rng) {}

Tensor MultiheadAttention::forward(const Tensor& query, const Tensor& key_value) {
    Tensor q = wq_.forward(query);
    Tensor k = wk_.forward(key_value);
    Tensor v = wv_.forward(key_value);
    Tensor weights = softmax_rows(multihead_scores(q, k, heads_));
    last_attention_.assign(weights.data().begin(), weights.data().end());
    Tensor mixed = multihead_mix(weights, v, heads_);
    return wo_.forward(mixed);
}

}  // namespace cfdiff::nn
