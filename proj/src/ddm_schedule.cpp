#include <cmath>

#include "cfdiff/ddm/diffusion.hpp"
#include "cfdiff/error.hpp"

namespace cfdiff::ddm {

DiffusionSchedule DiffusionSchedule::make(int steps) {
    if (steps < 2) throw ConfigError("DiffusionSchedule: need at least 2 steps, got " +
                                     std::to_string(steps));
    constexpr double alpha_first = 0.9999;
    constexpr double alpha_last = 0.98;
    DiffusionSchedule s;
    s.steps = steps;
    s.alpha.resize(steps);
    s.alpha_bar.resize(steps);
    s.sigma.assign(steps, 0.0);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        // endpoints pinned exactly; interpolation drift stays interior
        s.alpha[i] = i == 0 ? alpha_first
                   : i == steps - 1
                       ? alpha_last
                       : alpha_first + (alpha_last - alpha_first) * static_cast<double>(i) /
                                           static_cast<double>(steps - 1);
        prod *= s.alpha[i];
        s.alpha_bar[i] = prod;
    }
    return s;
}

namespace {
void check_step(int t, const DiffusionSchedule& schedule, const char* what) {
    if (t < 1 || t > schedule.steps)
        throw InputError(std::string(what) + ": step " + std::to_string(t) +
                         " outside [1, " + std::to_string(schedule.steps) + "]");
}
}  // namespace

std::vector<double> forward_sample(const std::vector<double>& x0, int t,
                                   const DiffusionSchedule& schedule, Rng& rng) {
    check_step(t, schedule, "forward_sample");
    const double ab = schedule.alpha_bar[t - 1];
    const double mean_coef = std::sqrt(ab);
    const double noise_coef = std::sqrt(1.0 - ab);
    std::vector<double> x(x0.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = mean_coef * x0[i] + noise_coef * rng.normal();
    return x;
}

std::vector<double> forward_chain_step(const std::vector<double>& x_prev, int t,
                                       const DiffusionSchedule& schedule, Rng& rng) {
    check_step(t, schedule, "forward_chain_step");
    const double a = schedule.alpha[t - 1];
    const double mean_coef = std::sqrt(a);
    const double noise_coef = std::sqrt(1.0 - a);
    std::vector<double> x(x_prev.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = mean_coef * x_prev[i] + noise_coef * rng.normal();
    return x;
}

}  // namespace cfdiff::ddm
