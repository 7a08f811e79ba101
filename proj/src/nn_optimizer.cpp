#include "cfdiff/nn/optimizer.hpp"

#include <cmath>

#include "cfdiff/error.hpp"

namespace cfdiff::nn {

void rmsprop_step(ParameterSet& params, double learning_rate, double rho, double eps) {
    for (const auto& p : params.all()) {
        auto values = p->tensor.mutable_data();
        const auto grads = p->tensor.grad();
        if (grads.size() != values.size()) {
            throw NumericError("rmsprop_step: no gradient for parameter " + p->path);
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grads[i];
            if (!std::isfinite(g)) {
                throw NumericError("rmsprop_step: non-finite gradient in " + p->path +
                                   " at index " + std::to_string(i));
            }
            double& acc = p->rmsprop_acc[i];
            acc = rho * acc + (1.0 - rho) * g * g;
            values[i] -= learning_rate * g / (std::sqrt(acc) + eps);
        }
    }
}

double PlateauScheduler::observe(double validation_loss) {
    if (validation_loss < state_.best_validation_loss) {
        state_.best_validation_loss = validation_loss;
        state_.epochs_since_improvement = 0;
    } else {
        ++state_.epochs_since_improvement;
        if (state_.epochs_since_improvement >= state_.patience) {
            const double decayed = state_.learning_rate * state_.decay_factor;
            state_.learning_rate = std::max(decayed, state_.min_learning_rate);
            state_.epochs_since_improvement = 0;
        }
    }
    return state_.learning_rate;
}

}  // namespace cfdiff::nn
