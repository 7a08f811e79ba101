#include <cmath>

#include "cfdiff/ddm/diffusion.hpp"
#include "cfdiff/error.hpp"
#include "cfdiff/io/config.hpp"

namespace cfdiff::ddm {

using nn::Tensor;

void ModelConfig::validate() const {
    if (diffusion_steps < 2) throw ConfigError("model: diffusion_steps must be >= 2");
    if (num_aps < 2 || num_receive_aps < 1 || num_aps != num_receive_aps + 1)
        throw ConfigError("model: need num_aps = num_receive_aps + 1 with num_receive_aps >= 1");
    if (antennas < 1) throw ConfigError("model: antennas must be >= 1");
    if (token_dim < 1 || fused_dim < 1 || mlp_hidden < 1 || location_hidden < 1)
        throw ConfigError("model: layer widths must be positive");
    if (attention_heads < 1 || token_dim % attention_heads != 0)
        throw ConfigError("model: token_dim must divide evenly into attention heads");
    if (!(normalization_scale > 0.0) || !std::isfinite(normalization_scale))
        throw ConfigError("model: normalization_scale must be positive and finite");
    if (!(sensing_scale > 0.0) || !std::isfinite(sensing_scale))
        throw ConfigError("model: sensing_scale must be positive and finite");
    if (!(area_scale_m > 0.0)) throw ConfigError("model: area_scale_m must be positive");
}

DiffusionModel::DiffusionModel(const ModelConfig& config)
    : config_(config), schedule_(DiffusionSchedule::make(config.diffusion_steps)) {
    config_.validate();
    Rng init_rng = Rng(config_.init_seed).derive(Stream::kInit, 0);

    if (config_.conditioned) {
        sensing_ = std::make_unique<enc::SensingEncoder>(params_, "sensing", config_.antennas,
                                                         config_.token_dim, init_rng);
        location_ = std::make_unique<enc::LocationEncoder>(
            params_, "location", config_.location_hidden, config_.token_dim, init_rng);
        fusion_ = std::make_unique<enc::CrossModalFusion>(params_, "fusion", config_.token_dim,
                                                          config_.attention_heads,
                                                          config_.fused_dim, init_rng);
    }

    Tensor table = Tensor::zeros({static_cast<std::size_t>(config_.diffusion_steps),
                                  static_cast<std::size_t>(config_.token_dim)});
    nn::init_fan_in_uniform(table, static_cast<std::size_t>(config_.token_dim), init_rng);
    time_embedding_ = params_.add("denoiser.time_embedding", std::move(table));

    const auto in_dim = static_cast<std::size_t>(config_.channel_dim() + config_.token_dim +
                                                 config_.fused_dim);
    const auto hidden = static_cast<std::size_t>(config_.mlp_hidden);
    const auto out_dim = static_cast<std::size_t>(config_.channel_dim());
    mlp1_ = std::make_unique<nn::Linear>(params_, "denoiser.hidden1", in_dim, hidden, init_rng);
    mlp2_ = std::make_unique<nn::Linear>(params_, "denoiser.hidden2", hidden, hidden, init_rng);
    mlp3_ = std::make_unique<nn::Linear>(params_, "denoiser.output", hidden, out_dim, init_rng);
}

Tensor DiffusionModel::zero_conditioning() const {
    return Tensor::zeros({1, static_cast<std::size_t>(config_.fused_dim)});
}

Tensor DiffusionModel::encode(const Conditioning& cond, bool training) {
    if (!config_.conditioned) return zero_conditioning();
    if (cond.h_sens_est == nullptr)
        throw InputError("encode: conditioned model requires a sensing-channel estimate");
    const Tensor tokens = sensing_->forward(*cond.h_sens_est, config_.num_receive_aps,
                                            config_.sensing_scale, training);
    const Tensor r_loc =
        location_->forward(cond.ue_location, config_.reference_ap, config_.area_scale_m);
    return fusion_->forward(tokens, r_loc);
}

Tensor DiffusionModel::reverse_step(const Tensor& x_t, const std::vector<int>& t,
                                    const Tensor& conditioning) {
    const auto dim = static_cast<std::size_t>(config_.channel_dim());
    if (x_t.shape().size() != 2 || x_t.shape()[1] != dim)
        throw DimensionError("reverse_step: x_t " + nn::shape_str(x_t.shape()) +
                             ", expected [batch, " + std::to_string(dim) + "]");
    const std::size_t batch = x_t.shape()[0];
    if (t.size() != batch)
        throw DimensionError("reverse_step: " + std::to_string(t.size()) + " steps for batch " +
                             std::to_string(batch));
    if (conditioning.shape().size() != 2 || conditioning.shape()[0] != batch ||
        conditioning.shape()[1] != static_cast<std::size_t>(config_.fused_dim))
        throw DimensionError("reverse_step: conditioning " +
                             nn::shape_str(conditioning.shape()) + ", expected [" +
                             std::to_string(batch) + ", " + std::to_string(config_.fused_dim) +
                             "]");
    std::vector<std::size_t> idx(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        if (t[b] < 1 || t[b] > config_.diffusion_steps)
            throw InputError("reverse_step: step " + std::to_string(t[b]) + " outside [1, " +
                             std::to_string(config_.diffusion_steps) + "]");
        idx[b] = static_cast<std::size_t>(t[b] - 1);
    }
    const Tensor tau = gather_rows(time_embedding_->tensor, idx);
    const Tensor input = nn::concat_cols({x_t, tau, conditioning});
    Tensor h = relu(mlp1_->forward(input));
    h = relu(mlp2_->forward(h));
    return mlp3_->forward(h);
}

int DiffusionModel::noise_matched_start(double normalized_error_var) const {
    if (!(normalized_error_var >= 0.0) || !std::isfinite(normalized_error_var))
        throw InputError("noise_matched_start: error variance must be finite and >= 0");
    int best_t = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= schedule_.steps; ++t) {
        const double gap = std::abs((1.0 - schedule_.alpha_bar[t - 1]) - normalized_error_var);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
        }
    }
    return best_t;
}

chan::CVec DiffusionModel::denoise(const chan::CVec& h_ls_link, const Conditioning* cond,
                                   std::optional<int> start_step) {
    const auto links = static_cast<std::size_t>(config_.num_aps) *
                       static_cast<std::size_t>(config_.antennas);
    if (h_ls_link.size() != links)
        throw DimensionError("denoise: input has " + std::to_string(h_ls_link.size()) +
                             " entries, expected " + std::to_string(links));
    const int t_start = start_step.value_or(config_.diffusion_steps);
    if (t_start < 1 || t_start > config_.diffusion_steps)
        throw InputError("denoise: start step " + std::to_string(t_start) + " outside [1, " +
                         std::to_string(config_.diffusion_steps) + "]");
    if (config_.conditioned && cond == nullptr)
        throw InputError("denoise: conditioned model requires conditioning inputs");

    // normalized flat state, contracted into the step-t* marginal mean
    const double start_coef = std::sqrt(schedule_.alpha_bar[t_start - 1]);
    std::vector<double> x(2 * links);
    for (std::size_t i = 0; i < links; ++i) {
        x[2 * i] = start_coef * h_ls_link[i].real() / config_.normalization_scale;
        x[2 * i + 1] = start_coef * h_ls_link[i].imag() / config_.normalization_scale;
    }

    const Tensor cond_vec = config_.conditioned ? encode(*cond, false) : zero_conditioning();
    for (int t = t_start; t >= 1; --t) {
        const Tensor x_t = Tensor::from({1, 2 * links}, x);
        const Tensor x_prev = reverse_step(x_t, {t}, cond_vec);
        const auto v = x_prev.data();
        x.assign(v.begin(), v.end());
    }

    chan::CVec out(links);
    for (std::size_t i = 0; i < links; ++i)
        out[i] = chan::Complex(x[2 * i] * config_.normalization_scale,
                               x[2 * i + 1] * config_.normalization_scale);
    for (const auto& z : out)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericError("denoise: non-finite output");
    return out;
}

void DiffusionModel::capture_state(io::Checkpoint& ckpt) const {
    if (!sensing_) return;
    const auto& s = *sensing_;
    io::capture_buffer(ckpt, "sensing.norm1.running_mean", s.norm1().running_mean());
    io::capture_buffer(ckpt, "sensing.norm1.running_var", s.norm1().running_var());
    io::capture_buffer(ckpt, "sensing.norm2.running_mean", s.norm2().running_mean());
    io::capture_buffer(ckpt, "sensing.norm2.running_var", s.norm2().running_var());
    io::capture_buffer(ckpt, "sensing.norm3.running_mean", s.norm3().running_mean());
    io::capture_buffer(ckpt, "sensing.norm3.running_var", s.norm3().running_var());
}

void DiffusionModel::restore_state(const io::Checkpoint& ckpt) {
    if (!sensing_) return;
    io::restore_buffer(ckpt, "sensing.norm1.running_mean", sensing_->norm1().running_mean());
    io::restore_buffer(ckpt, "sensing.norm1.running_var", sensing_->norm1().running_var());
    io::restore_buffer(ckpt, "sensing.norm2.running_mean", sensing_->norm2().running_mean());
    io::restore_buffer(ckpt, "sensing.norm2.running_var", sensing_->norm2().running_var());
    io::restore_buffer(ckpt, "sensing.norm3.running_mean", sensing_->norm3().running_mean());
    io::restore_buffer(ckpt, "sensing.norm3.running_var", sensing_->norm3().running_var());
}

namespace {

void model_to_config(const ModelConfig& m, io::Config& c) {
    c.set_int("model.diffusion_steps", m.diffusion_steps);
    c.set_int("model.conditioned", m.conditioned ? 1 : 0);
    c.set_int("model.num_aps", m.num_aps);
    c.set_int("model.num_receive_aps", m.num_receive_aps);
    c.set_int("model.antennas", m.antennas);
    c.set_int("model.token_dim", m.token_dim);
    c.set_int("model.location_hidden", m.location_hidden);
    c.set_int("model.attention_heads", m.attention_heads);
    c.set_int("model.fused_dim", m.fused_dim);
    c.set_int("model.mlp_hidden", m.mlp_hidden);
    c.set_real("model.normalization_scale", m.normalization_scale);
    c.set_real("model.sensing_scale", m.sensing_scale);
    c.set_real("model.area_scale_m", m.area_scale_m);
    c.set_real("model.reference_ap_x", m.reference_ap.first);
    c.set_real("model.reference_ap_y", m.reference_ap.second);
    c.set_u64("model.init_seed", m.init_seed);
}

ModelConfig model_from_config(const io::Config& c) {
    ModelConfig m;
    m.diffusion_steps = static_cast<int>(c.get_int("model.diffusion_steps"));
    m.conditioned = c.get_int("model.conditioned") != 0;
    m.num_aps = static_cast<int>(c.get_int("model.num_aps"));
    m.num_receive_aps = static_cast<int>(c.get_int("model.num_receive_aps"));
    m.antennas = static_cast<int>(c.get_int("model.antennas"));
    m.token_dim = static_cast<int>(c.get_int("model.token_dim"));
    m.location_hidden = static_cast<int>(c.get_int("model.location_hidden"));
    m.attention_heads = static_cast<int>(c.get_int("model.attention_heads"));
    m.fused_dim = static_cast<int>(c.get_int("model.fused_dim"));
    m.mlp_hidden = static_cast<int>(c.get_int("model.mlp_hidden"));
    m.normalization_scale = c.get_real("model.normalization_scale");
    m.sensing_scale = c.get_real("model.sensing_scale");
    m.area_scale_m = c.get_real("model.area_scale_m");
    m.reference_ap = {c.get_real("model.reference_ap_x"), c.get_real("model.reference_ap_y")};
    m.init_seed = c.get_u64("model.init_seed");
    return m;
}

}  // namespace

void save_model(const DiffusionModel& model, const nn::OptimizerState& optimizer,
                const std::string& extra_config_echo, const std::string& path) {
    io::Config c;
    model_to_config(model.config(), c);
    io::Checkpoint ckpt;
    ckpt.config_echo = c.to_string() + extra_config_echo;
    ckpt.normalization_scale = model.config().normalization_scale;
    ckpt.sensing_scale = model.config().sensing_scale;
    ckpt.optimizer = optimizer;
    io::capture_parameters(model.params(), ckpt);
    model.capture_state(ckpt);
    io::save_checkpoint(ckpt, path);
}

LoadedModel load_model(const std::string& path) {
    const io::Checkpoint ckpt = io::load_checkpoint(path);
    const io::Config c = io::Config::parse_string(ckpt.config_echo);
    LoadedModel out;
    out.model = std::make_unique<DiffusionModel>(model_from_config(c));
    io::restore_parameters(ckpt, out.model->params());
    out.model->restore_state(ckpt);
    out.optimizer = ckpt.optimizer;
    out.config_echo = ckpt.config_echo;
    return out;
}

}  // namespace cfdiff::ddm
