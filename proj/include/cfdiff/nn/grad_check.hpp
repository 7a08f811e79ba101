#pragma once

#include <cstddef>
#include <functional>

#include "cfdiff/nn/tensor.hpp"

namespace cfdiff::nn {

struct GradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// Compares the analytic gradient of `target` against central finite
// differences of the scalar produced by `loss_fn`. `loss_fn` must rebuild its
// graph from the current leaf values on every call; `target` is a leaf whose
// values are perturbed in place (step 1e-5) and restored. Relative error per
// coordinate is |ga - gn| / max(1e-6, |ga| + |gn|).
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, Tensor target,
                           double tolerance, double step = 1e-5);

}  // namespace cfdiff::nn
