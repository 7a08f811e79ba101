#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "cfdiff/nn/tensor.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff::nn {

// Trainable tensor plus its RMSprop accumulator. The path identifies the
// parameter in checkpoints and error messages.
struct Parameter {
    std::string path;
    Tensor tensor;
    std::vector<double> rmsprop_acc;

    Parameter(std::string p, Tensor t)
        : path(std::move(p)), tensor(std::move(t)), rmsprop_acc(tensor.size(), 0.0) {}
};

using ParameterPtr = std::shared_ptr<Parameter>;

// Registry of all trainable parameters of a model in registration order.
// Checkpoint serialization and optimizer steps iterate this order.
class ParameterSet {
public:
    ParameterPtr add(const std::string& path, Tensor tensor);
    const std::vector<ParameterPtr>& all() const { return params_; }
    ParameterPtr find(const std::string& path) const;  // nullptr if absent
    std::size_t total_size() const;
    void zero_grads();

private:
    std::vector<ParameterPtr> params_;
};

// fills `t` in place with uniform draws in +-sqrt(1/fan_in)
void init_fan_in_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

// y = x * W + b, W stored [in_dim, out_dim]
class Linear {
public:
    Linear(ParameterSet& params, const std::string& path, std::size_t in_dim, std::size_t out_dim,
           Rng& rng);
    Tensor forward(const Tensor& input) const;

    const ParameterPtr& weight() const { return weight_; }
    const ParameterPtr& bias() const { return bias_; }
    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }

private:
    std::size_t in_dim_, out_dim_;
    ParameterPtr weight_;  // [in_dim, out_dim]
    ParameterPtr bias_;    // [out_dim]
};

// bias-free convolution; batch normalization supplies the affine shift wherever
// this layer is used
class Conv2d {
public:
    Conv2d(ParameterSet& params, const std::string& path, std::size_t ch_in, std::size_t ch_out,
           std::size_t kernel, int stride, int padding, Rng& rng);
    Tensor forward(const Tensor& input) const;

    const ParameterPtr& kernels() const { return kernels_; }

private:
    std::size_t ch_in_, ch_out_, kernel_;
    int stride_, padding_;
    ParameterPtr kernels_;  // [ch_out, ch_in, k, k]
};

// Per-channel batch normalization over [batch, ch] or [batch, ch, H, W].
// Train mode standardizes with batch statistics (biased variance) and updates
// running statistics; eval mode uses the running statistics.
class BatchNorm {
public:
    BatchNorm(ParameterSet& params, const std::string& path, std::size_t channels,
              double eps = 1e-5, double momentum = 0.1);
    Tensor forward(const Tensor& input, bool training);

    const ParameterPtr& gamma() const { return gamma_; }
    const ParameterPtr& beta() const { return beta_; }
    std::vector<double>& running_mean() { return running_mean_; }
    std::vector<double>& running_var() { return running_var_; }
    const std::vector<double>& running_mean() const { return running_mean_; }
    const std::vector<double>& running_var() const { return running_var_; }
    double eps() const { return eps_; }
    double momentum() const { return momentum_; }
    std::size_t channels() const { return channels_; }

private:
    std::size_t channels_;
    double eps_, momentum_;
    ParameterPtr gamma_;  // [ch]
    ParameterPtr beta_;   // [ch]
    std::vector<double> running_mean_;
    std::vector<double> running_var_;
};

// Scaled dot-product attention with per-head splits of the model dimension.
// No residual path: the output is purely the projected mixed values.
class MultiheadAttention {
public:
    MultiheadAttention(ParameterSet& params, const std::string& path, std::size_t model_dim,
                       int heads, Rng& rng);
    // query [n_q, d], key_value [n_kv, d] -> [n_q, d]
    Tensor forward(const Tensor& query, const Tensor& key_value);

    // softmax weights of the most recent forward, laid out [heads*n_q, n_kv]
    const std::vector<double>& last_attention() const { return last_attention_; }
    int heads() const { return heads_; }
    std::size_t model_dim() const { return model_dim_; }

private:
    std::size_t model_dim_;
    int heads_;
    Linear wq_, wk_, wv_, wo_;
    std::vector<double> last_attention_;
};

}  // namespace cfdiff::nn
