#include "cfdiff/nn/grad_check.hpp"

#include <cmath>
#include <vector>

#include "cfdiff/error.hpp"

namespace cfdiff::nn {

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, Tensor target,
                           double tolerance, double step) {
    if (!target.defined() || !target.requires_grad()) {
        throw InputError("grad_check: target must be a leaf tensor with requires_grad");
    }

    target.zero_grad();
    Tensor loss = loss_fn();
    backward(loss);
    std::vector<double> analytic(target.grad().begin(), target.grad().end());
    if (analytic.empty()) analytic.assign(target.size(), 0.0);  // target unused by loss_fn

    GradCheckReport report;
    report.pass = true;
    report.checked = target.size();
    auto values = target.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double fp = loss_fn().item();
        values[i] = saved - step;
        const double fm = loss_fn().item();
        values[i] = saved;
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom = std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace cfdiff::nn
