#include <algorithm>
#include <cmath>

#include "cfdiff/ddm/diffusion.hpp"
#include "cfdiff/error.hpp"

namespace cfdiff::ddm {

using nn::Tensor;

std::vector<TrainItem> make_train_items(const data::Dataset& dataset,
                                        const std::vector<std::uint64_t>& ids,
                                        const ModelConfig& config) {
    config.validate();
    std::vector<TrainItem> items;
    for (std::uint64_t id : ids) {
        if (id >= dataset.samples.size())
            throw InputError("make_train_items: sample id out of range");
        const data::Sample& s = dataset.samples[id];
        if (s.scenario.num_aps != config.num_aps ||
            s.scenario.num_receive_aps != config.num_receive_aps ||
            s.scenario.antennas != config.antennas)
            throw ConfigError("make_train_items: sample dims (L=" +
                              std::to_string(s.scenario.num_aps) +
                              ", M=" + std::to_string(s.scenario.antennas) +
                              ") do not match model dims (L=" + std::to_string(config.num_aps) +
                              ", M=" + std::to_string(config.antennas) + ")");
        const auto L = static_cast<std::size_t>(s.scenario.num_aps);
        const auto M = static_cast<std::size_t>(s.scenario.antennas);
        const auto U = static_cast<std::size_t>(s.scenario.num_ues);
        for (std::size_t u = 0; u < U; ++u) {
            TrainItem item;
            item.sample_id = id;
            item.ue_index = static_cast<int>(u);
            item.x0.resize(2 * L * M);
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t m = 0; m < M; ++m) {
                    const chan::Complex z =
                        s.h_comm[(l * U + u) * M + m] / config.normalization_scale;
                    item.x0[2 * (l * M + m)] = z.real();
                    item.x0[2 * (l * M + m) + 1] = z.imag();
                }
            item.h_sens_est = s.h_sens_est;
            item.ue_location = s.ue_locations[u];
            items.push_back(std::move(item));
        }
    }
    return items;
}

namespace {

// Draws the diffusion pair for one item: uniform t, then one ancestral chain
// x_0 -> x_1 -> ... -> x_t, keeping (x_{t-1}, x_t) from the same noise path.
struct DiffusionPair {
    int t = 1;
    std::vector<double> x_prev;
    std::vector<double> x_t;
};

DiffusionPair draw_pair(const std::vector<double>& x0, const DiffusionSchedule& schedule,
                        Rng& rng) {
    DiffusionPair p;
    p.t = rng.uniform_int(1, schedule.steps);
    p.x_prev = x0;
    for (int s = 1; s < p.t; ++s) p.x_prev = forward_chain_step(p.x_prev, s, schedule, rng);
    p.x_t = forward_chain_step(p.x_prev, p.t, schedule, rng);
    return p;
}

// Assembles one batch and returns the loss tensor (still attached to the
// tape when training).
Tensor batch_loss(DiffusionModel& model, const std::vector<TrainItem>& items,
                  const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                  Rng& rng, bool training) {
    const auto dim = static_cast<std::size_t>(model.config().channel_dim());
    const std::size_t batch = end - begin;
    std::vector<double> x_t(batch * dim), target(batch * dim);
    std::vector<int> steps(batch);
    std::vector<Tensor> cond_rows;
    if (model.config().conditioned) cond_rows.reserve(batch);

    for (std::size_t b = 0; b < batch; ++b) {
        const TrainItem& item = items[order[begin + b]];
        DiffusionPair pair = draw_pair(item.x0, model.schedule(), rng);
        steps[b] = pair.t;
        std::copy(pair.x_t.begin(), pair.x_t.end(), x_t.begin() + static_cast<long>(b * dim));
        std::copy(pair.x_prev.begin(), pair.x_prev.end(),
                  target.begin() + static_cast<long>(b * dim));
        if (model.config().conditioned) {
            Conditioning cond{&item.h_sens_est, item.ue_location};
            cond_rows.push_back(model.encode(cond, training));
        }
    }

    const Tensor x_t_tensor = Tensor::from({batch, dim}, std::move(x_t));
    const Tensor target_tensor = Tensor::from({batch, dim}, std::move(target));
    const Tensor cond_tensor =
        model.config().conditioned
            ? concat_rows(cond_rows)
            : Tensor::zeros({batch, static_cast<std::size_t>(model.config().fused_dim)});
    const Tensor pred = model.reverse_step(x_t_tensor, steps, cond_tensor);
    // the NMSE loss normalizes per AP-UE link, like the evaluation metric;
    // normalizing per item would underweight a UE's weak AP links by the
    // cross-AP path-loss ratio
    const auto num_aps = static_cast<std::size_t>(model.config().num_aps);
    return normalized_sq_error(reshape(pred, {batch * num_aps, dim / num_aps}),
                               reshape(target_tensor, {batch * num_aps, dim / num_aps}));
}

double validation_loss(DiffusionModel& model, const std::vector<TrainItem>& items,
                       const TrainSettings& settings) {
    // fixed draws each epoch, so the loss tracks only model movement
    Rng rng = Rng(settings.seed).derive(Stream::kGeneric, 0);
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double total = 0.0;
    for (std::size_t begin = 0; begin < items.size();
         begin += static_cast<std::size_t>(settings.batch_size)) {
        const std::size_t end =
            std::min(items.size(), begin + static_cast<std::size_t>(settings.batch_size));
        const Tensor loss = batch_loss(model, items, order, begin, end, rng, false);
        total += loss.item() * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(items.size());
}

}  // namespace

std::vector<EpochLog> train(DiffusionModel& model, const std::vector<TrainItem>& train_items,
                            const std::vector<TrainItem>& val_items,
                            const TrainSettings& settings, nn::OptimizerState& optimizer) {
    if (train_items.empty() || val_items.empty())
        throw InputError("train: training and validation splits must be non-empty");
    if (settings.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (settings.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");

    nn::OptimizerState state = optimizer;
    if (!std::isfinite(state.best_validation_loss)) {
        // fresh run: adopt the settings' schedule knobs
        state.learning_rate = settings.learning_rate;
        state.decay_factor = settings.decay_factor;
        state.patience = settings.patience;
        state.min_learning_rate = settings.min_learning_rate;
    }
    nn::PlateauScheduler scheduler(state);

    io::Checkpoint best;  // weights at the lowest validation loss so far
    bool have_best = false;

    std::vector<EpochLog> log;
    for (int epoch = 1; epoch <= settings.max_epochs; ++epoch) {
        Rng epoch_rng = Rng(settings.seed).derive(Stream::kEpoch, static_cast<std::uint64_t>(epoch));
        std::vector<std::size_t> order(train_items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const auto j = static_cast<std::size_t>(
                epoch_rng.uniform_int(static_cast<int>(i), static_cast<int>(order.size() - 1)));
            std::swap(order[i], order[j]);
        }

        const double lr = scheduler.state().learning_rate;
        double total = 0.0;
        std::size_t step_index = 0;
        for (std::size_t begin = 0; begin < train_items.size();
             begin += static_cast<std::size_t>(settings.batch_size), ++step_index) {
            const std::size_t end = std::min(
                train_items.size(), begin + static_cast<std::size_t>(settings.batch_size));
            model.params().zero_grads();
            const Tensor loss = batch_loss(model, train_items, order, begin, end, epoch_rng, true);
            const double value = loss.item();
            if (!std::isfinite(value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(step_index));
            nn::backward(loss);
            nn::rmsprop_step(model.params(), lr, settings.rho, settings.rmsprop_eps);
            total += value * static_cast<double>(end - begin);
        }
        const double train_loss = total / static_cast<double>(train_items.size());
        const double val_loss = validation_loss(model, val_items, settings);
        if (val_loss < scheduler.state().best_validation_loss) {
            best = io::Checkpoint{};
            io::capture_parameters(model.params(), best);
            model.capture_state(best);
            have_best = true;
        }
        scheduler.observe(val_loss);
        log.push_back({epoch, train_loss, val_loss, lr});

        if (scheduler.state().learning_rate <= scheduler.state().min_learning_rate) break;
    }
    if (have_best) {
        io::restore_parameters(best, model.params());
        model.restore_state(best);
    }
    optimizer = scheduler.state();
    return log;
}

}  // namespace cfdiff::ddm
