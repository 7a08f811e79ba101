#pragma once

#include <span>
#include <vector>

#include "cfdiff/nn/tensor.hpp"
#include "cfdiff/rng.hpp"

namespace testutil {

inline cfdiff::nn::Tensor random_tensor(cfdiff::nn::Shape shape, cfdiff::Rng& rng,
                                        bool requires_grad = false, double scale = 1.0) {
    auto t = cfdiff::nn::Tensor::zeros(std::move(shape), requires_grad);
    for (auto& v : t.mutable_data()) v = scale * rng.normal();
    return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace testutil
