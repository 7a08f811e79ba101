#pragma once

#include <array>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/nn/layers.hpp"

namespace cfdiff::enc {

// Three conv->batchnorm->ReLU stages (2 -> 16 -> 32 -> 64 channels, 3x3,
// stride 1, padding 1) shared across receiving APs, followed by a shared
// linear head. Each AP's sensing-channel estimate becomes one 16-dim token,
// so permuting APs permutes the tokens and self-attention ranges over APs.
class SensingEncoder {
  public:
    SensingEncoder(nn::ParameterSet& params, const std::string& path, int antennas,
                   int token_dim, Rng& rng);

    // h_sens_est is complex [L_r, M, M]; entries are divided by `scale`.
    // Returns the token sequence [L_r, token_dim].
    nn::Tensor forward(const chan::CVec& h_sens_est, int num_receive_aps, double scale,
                       bool training);

    // mean over tokens -> [1, token_dim] (diagnostic pooled embedding)
    static nn::Tensor pool(const nn::Tensor& tokens);

    nn::BatchNorm& norm1() { return bn1_; }
    nn::BatchNorm& norm2() { return bn2_; }
    nn::BatchNorm& norm3() { return bn3_; }
    const nn::BatchNorm& norm1() const { return bn1_; }
    const nn::BatchNorm& norm2() const { return bn2_; }
    const nn::BatchNorm& norm3() const { return bn3_; }

  private:
    int antennas_, token_dim_;
    nn::Conv2d conv1_, conv2_, conv3_;
    nn::BatchNorm bn1_, bn2_, bn3_;
    nn::Linear head_;
};

// (x, y, r, theta) with r/theta polar about a reference AP; x, y, r divided
// by `area_scale`, theta in radians. One 64-unit hidden layer, 16-dim output.
class LocationEncoder {
  public:
    LocationEncoder(nn::ParameterSet& params, const std::string& path, int hidden, int token_dim,
                    Rng& rng);

    nn::Tensor forward(const chan::Point& ue, const chan::Point& reference, double area_scale);

    // the raw 4-feature input vector, exposed for tests
    static std::array<double, 4> features(const chan::Point& ue, const chan::Point& reference,
                                          double area_scale);

  private:
    nn::Linear fc1_, fc2_;
};

// One transformer layer without residuals: self-attention over sensing
// tokens, cross-attention with the location embedding as the query, then a
// two-layer feedforward expansion to the fused conditioning vector.
class CrossModalFusion {
  public:
    CrossModalFusion(nn::ParameterSet& params, const std::string& path, int token_dim, int heads,
                     int fused_dim, Rng& rng);

    // tokens [L_r, token_dim], location [1, token_dim] -> [1, fused_dim]
    nn::Tensor forward(const nn::Tensor& tokens, const nn::Tensor& location);

    // softmax weights of the most recent cross-attention, [heads, n_tokens]
    const std::vector<double>& last_cross_attention() const {
        return cross_attn_.last_attention();
    }

  private:
    nn::MultiheadAttention self_attn_, cross_attn_;
    nn::Linear ff1_, ff2_;
};

}  // namespace cfdiff::enc
