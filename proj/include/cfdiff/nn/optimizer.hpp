#pragma once

#include <limits>

#include "cfdiff/nn/layers.hpp"

namespace cfdiff::nn {

// Learning-rate schedule state carried across epochs (and into checkpoints).
struct OptimizerState {
    double learning_rate = 1e-3;
    double decay_factor = 0.5;
    int patience = 5;
    double min_learning_rate = 1e-6;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    int epochs_since_improvement = 0;
};

// One RMSprop update over every parameter, reading gradients accumulated on
// the tensors. Throws NumericError naming the parameter on non-finite
// gradients.
void rmsprop_step(ParameterSet& params, double learning_rate, double rho = 0.99,
                  double eps = 1e-8);

// Plateau decay: when validation loss fails to improve for `patience`
// consecutive epochs, multiply the learning rate by decay_factor once and
// restart the count.
class PlateauScheduler {
public:
    explicit PlateauScheduler(OptimizerState state) : state_(state) {}

    // call once per epoch; returns the learning rate to use next
    double observe(double validation_loss);

    const OptimizerState& state() const { return state_; }
    OptimizerState& state() { return state_; }

private:
    OptimizerState state_;
};

}  // namespace cfdiff::nn
