#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/data/dataset.hpp"
#include "cfdiff/enc/encoders.hpp"
#include "cfdiff/io/checkpoint.hpp"
#include "cfdiff/nn/layers.hpp"
#include "cfdiff/nn/optimizer.hpp"

namespace cfdiff::ddm {

// Noise retention factors alpha_t linearly spaced from 0.9999 down to 0.98,
// with cumulative products alpha_bar. Steps are indexed t in {1..steps};
// vectors store step t at index t-1. sigma is the reverse-step noise scale,
// fixed at zero: the predictor outputs x_{t-1} directly.
struct DiffusionSchedule {
    int steps = 0;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sigma;

    static DiffusionSchedule make(int steps);
};

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, eps ~ N(0, I)
std::vector<double> forward_sample(const std::vector<double>& x0, int t,
                                   const DiffusionSchedule& schedule, Rng& rng);

// One Markov corruption step of the chain underlying forward_sample:
// x_t = sqrt(alpha_t) x_{t-1} + sqrt(1 - alpha_t) eps
std::vector<double> forward_chain_step(const std::vector<double>& x_prev, int t,
                                       const DiffusionSchedule& schedule, Rng& rng);

struct ModelConfig {
    int diffusion_steps = 50;  // T
    bool conditioned = true;   // false: zero conditioning vector (baseline)
    int num_aps = 3;           // L
    int num_receive_aps = 2;   // L_r
    int antennas = 8;          // M
    int token_dim = 16;        // sensing/location/time embedding width
    int location_hidden = 64;
    int attention_heads = 8;
    int fused_dim = 128;       // conditioning vector width
    int mlp_hidden = 512;
    double normalization_scale = 1.0;  // channel-component RMS divisor
    double sensing_scale = 1.0;        // sensing-estimate RMS divisor
    double area_scale_m = 100.0;       // coordinate divisor
    chan::Point reference_ap{0.0, 50.0};
    std::uint64_t init_seed = 1;

    int channel_dim() const { return 2 * num_aps * antennas; }  // flattened reals
    void validate() const;
};

// Conditioning for one UE: the multi-static sensing estimate shared by the
// UE's sample, plus the UE position.
struct Conditioning {
    const chan::CVec* h_sens_est = nullptr;  // [L_r, M, M]
    chan::Point ue_location{0.0, 0.0};
};

// One training item per (sample, UE): the UE's true channel to all APs,
// normalized and flattened to [2*L*M] reals (re, im interleaved).
struct TrainItem {
    std::vector<double> x0;
    chan::CVec h_sens_est;
    chan::Point ue_location;
    std::uint64_t sample_id = 0;
    int ue_index = 0;
};

// Reverse predictor x_{t-1} = MLP(x_t, tau_t, R_MMT) with learned per-step
// embeddings tau_t and the fused conditioning vector R_MMT (zeros when
// unconditioned).
class DiffusionModel {
  public:
    explicit DiffusionModel(const ModelConfig& config);

    // conditioning embedding [1, fused_dim]; unconditioned models and null
    // conditioning on an unconditioned model both yield zeros
    nn::Tensor encode(const Conditioning& cond, bool training);
    nn::Tensor zero_conditioning() const;

    // x_t [B, 2LM], per-row steps t in {1..T}, conditioning [B, fused_dim]
    nn::Tensor reverse_step(const nn::Tensor& x_t, const std::vector<int>& t,
                            const nn::Tensor& conditioning);

    // Full inference for one UE: start from the LS estimate scaled into the
    // step-t* marginal, iterate the reverse predictor down to t=1, then
    // de-normalize. start_step nullopt -> T. Conditioned models require cond.
    chan::CVec denoise(const chan::CVec& h_ls_link, const Conditioning* cond,
                       std::optional<int> start_step = std::nullopt);

    // start step whose corruption level best matches a known LS error
    // variance (normalized units): argmin_t |(1 - alpha_bar_t) - error_var|
    int noise_matched_start(double normalized_error_var) const;

    const ModelConfig& config() const { return config_; }
    const DiffusionSchedule& schedule() const { return schedule_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }
    enc::SensingEncoder* sensing_encoder() { return sensing_ ? sensing_.get() : nullptr; }
    enc::CrossModalFusion* fusion() { return fusion_ ? fusion_.get() : nullptr; }

    // batchnorm running statistics (only conditioned models have any)
    void capture_state(io::Checkpoint& ckpt) const;
    void restore_state(const io::Checkpoint& ckpt);

  private:
    ModelConfig config_;
    DiffusionSchedule schedule_;
    nn::ParameterSet params_;
    std::unique_ptr<enc::SensingEncoder> sensing_;
    std::unique_ptr<enc::LocationEncoder> location_;
    std::unique_ptr<enc::CrossModalFusion> fusion_;
    nn::ParameterPtr time_embedding_;  // [T, token_dim]
    std::unique_ptr<nn::Linear> mlp1_, mlp2_, mlp3_;
};

struct TrainSettings {
    int batch_size = 32;
    int max_epochs = 200;
    double learning_rate = 1e-3;
    double decay_factor = 0.5;
    int patience = 5;
    double min_learning_rate = 1e-6;
    double rho = 0.99;
    double rmsprop_eps = 1e-8;
    std::uint64_t seed = 1;  // batch order + diffusion draws
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

// One item per (sample, UE) over the given sample ids; x0 normalized by
// config.normalization_scale.
std::vector<TrainItem> make_train_items(const data::Dataset& dataset,
                                        const std::vector<std::uint64_t>& ids,
                                        const ModelConfig& config);

// Mini-batch training of the reverse predictor with the per-link normalized
// error loss, RMSprop updates, and plateau learning-rate decay on the
// validation loss. Returns the per-epoch log; `optimizer` carries schedule
// state in and out (resume-friendly). The model is left at the weights of its
// best validation epoch. Aborts with NumericError naming epoch/step when the
// loss turns non-finite; stops early once the learning rate hits its floor.
std::vector<EpochLog> train(DiffusionModel& model, const std::vector<TrainItem>& train_items,
                            const std::vector<TrainItem>& val_items,
                            const TrainSettings& settings, nn::OptimizerState& optimizer);

// Checkpoint plumbing: parameters + batchnorm state + optimizer + scales,
// with the model config echoed as config text so loading rebuilds the model.
void save_model(const DiffusionModel& model, const nn::OptimizerState& optimizer,
                const std::string& extra_config_echo, const std::string& path);

struct LoadedModel {
    std::unique_ptr<DiffusionModel> model;
    nn::OptimizerState optimizer;
    std::string config_echo;
};
LoadedModel load_model(const std::string& path);

}  // namespace cfdiff::ddm
