#include "cfdiff/enc/encoders.hpp"

#include <cmath>

#include "cfdiff/error.hpp"

namespace cfdiff::enc {

using nn::Tensor;

SensingEncoder::SensingEncoder(nn::ParameterSet& params, const std::string& path, int antennas,
                               int token_dim, Rng& rng)
    : antennas_(antennas),
      token_dim_(token_dim),
      conv1_(params, path + ".conv1", 2, 16, 3, 1, 1, rng),
      conv2_(params, path + ".conv2", 16, 32, 3, 1, 1, rng),
      conv3_(params, path + ".conv3", 32, 64, 3, 1, 1, rng),
      bn1_(params, path + ".norm1", 16),
      bn2_(params, path + ".norm2", 32),
      bn3_(params, path + ".norm3", 64),
      head_(params, path + ".head", 64 * static_cast<std::size_t>(antennas) * antennas,
            static_cast<std::size_t>(token_dim), rng) {
    if (antennas < 1) throw ConfigError("SensingEncoder: antennas must be >= 1");
}

Tensor SensingEncoder::forward(const chan::CVec& h_sens_est, int num_receive_aps, double scale,
                               bool training) {
    const auto M = static_cast<std::size_t>(antennas_);
    const auto Lr = static_cast<std::size_t>(num_receive_aps);
    if (h_sens_est.size() != Lr * M * M)
        throw ConfigError("SensingEncoder: input has " + std::to_string(h_sens_est.size()) +
                          " entries, expected " + std::to_string(Lr * M * M) + " for L_r=" +
                          std::to_string(Lr) + ", M=" + std::to_string(M));
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ConfigError("SensingEncoder: normalization scale must be positive and finite");

    // [L_r, 2, M, M]: channel 0 real parts, channel 1 imaginary parts
    std::vector<double> planes(Lr * 2 * M * M);
    for (std::size_t r = 0; r < Lr; ++r)
        for (std::size_t i = 0; i < M * M; ++i) {
            const chan::Complex z = h_sens_est[r * M * M + i] / scale;
            planes[r * 2 * M * M + i] = z.real();
            planes[r * 2 * M * M + M * M + i] = z.imag();
        }
    Tensor x = Tensor::from({Lr, 2, M, M}, std::move(planes));

    x = relu(bn1_.forward(conv1_.forward(x), training));
    x = relu(bn2_.forward(conv2_.forward(x), training));
    x = relu(bn3_.forward(conv3_.forward(x), training));
    x = reshape(x, {Lr, 64 * M * M});
    return head_.forward(x);  // [L_r, token_dim]
}

Tensor SensingEncoder::pool(const Tensor& tokens) {
    const std::size_t n = tokens.shape()[0];
    return matmul(Tensor::full({1, n}, 1.0 / static_cast<double>(n)), tokens);
}

LocationEncoder::LocationEncoder(nn::ParameterSet& params, const std::string& path, int hidden,
                                 int token_dim, Rng& rng)
    : fc1_(params, path + ".fc1", 4, static_cast<std::size_t>(hidden), rng),
      fc2_(params, path + ".fc2", static_cast<std::size_t>(hidden),
           static_cast<std::size_t>(token_dim), rng) {}

std::array<double, 4> LocationEncoder::features(const chan::Point& ue,
                                                const chan::Point& reference, double area_scale) {
    if (!(area_scale > 0.0)) throw ConfigError("LocationEncoder: area scale must be positive");
    const double r = chan::distance(ue, reference);
    // degenerate polar point: bearing defined as 0 when the UE sits on the AP
    const double theta = r > 0.0 ? chan::bearing(reference, ue) : 0.0;
    return {ue.first / area_scale, ue.second / area_scale, r / area_scale, theta};
}

Tensor LocationEncoder::forward(const chan::Point& ue, const chan::Point& reference,
                                double area_scale) {
    const auto f = features(ue, reference, area_scale);
    Tensor x = Tensor::from({1, 4}, {f[0], f[1], f[2], f[3]});
    return fc2_.forward(relu(fc1_.forward(x)));  // [1, token_dim]
}

CrossModalFusion::CrossModalFusion(nn::ParameterSet& params, const std::string& path,
                                   int token_dim, int heads, int fused_dim, Rng& rng)
    : self_attn_(params, path + ".self_attn", static_cast<std::size_t>(token_dim), heads, rng),
      cross_attn_(params, path + ".cross_attn", static_cast<std::size_t>(token_dim), heads, rng),
      ff1_(params, path + ".ff1", static_cast<std::size_t>(token_dim),
           static_cast<std::size_t>(fused_dim), rng),
      ff2_(params, path + ".ff2", static_cast<std::size_t>(fused_dim),
           static_cast<std::size_t>(fused_dim), rng) {}

Tensor CrossModalFusion::forward(const Tensor& tokens, const Tensor& location) {
    if (tokens.shape().size() != 2 || location.shape().size() != 2 ||
        tokens.shape()[1] != location.shape()[1])
        throw ConfigError("CrossModalFusion: token dim " +
                          nn::shape_str(tokens.shape()) + " does not match location dim " +
                          nn::shape_str(location.shape()));
    const Tensor mixed = self_attn_.forward(tokens, tokens);    // [L_r, d]
    const Tensor fused = cross_attn_.forward(location, mixed);  // [1, d]
    return ff2_.forward(relu(ff1_.forward(fused)));             // [1, fused_dim]
}

}  // namespace cfdiff::enc
