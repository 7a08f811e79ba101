#pragma once

#include <vector>

#include "cfdiff/chan/simulator.hpp"

namespace cfdiff::est {

using chan::Complex;
using chan::CVec;

// Classical estimates derived from one realization plus receiver noise.
struct EstimateBundle {
    CVec h_ls;        // [L, U, M]
    CVec h_mmse;      // [L, U, M]
    CVec h_sens_est;  // [L_r, M, M]
    double noise_power_w = 0.0;
};

// h_hat[l][u] = y[l][s_u] / sqrt(tau_p p_u)
CVec ls_estimate(const chan::PilotObservation& obs, const std::vector<int>& assignment,
                 const std::vector<double>& powers, int tau_p, int L, int M);

// scalar LMMSE per link with known large-scale statistics:
// h_hat[l][u] = sqrt(tau_p p_u) beta[l][u] / (tau_p sum_{i in S_u} p_i beta[l][i] + sigma^2)
//               * y[l][s_u]
CVec mmse_estimate(const chan::PilotObservation& obs, const std::vector<int>& assignment,
                   const std::vector<double>& powers, const std::vector<double>& beta, int tau_p,
                   int L, int M, double noise_power_w);

// per-complex-entry variance of the LS estimation error for UE u, averaged
// over APs: sigma^2/(tau_p p_u) + sum_{i in S_u \ {u}} (p_i/p_u) mean_l beta_li
double ls_error_variance(const std::vector<int>& assignment, const std::vector<double>& powers,
                         const std::vector<double>& beta, int tau_p, int L, int u,
                         double noise_power_w);

// H_hat = Y X^H (X X^H)^{-1}; Y, X are [M, N] row-major, N >= M
CVec sensing_ls(const CVec& y, const CVec& x, int M, int N);

struct NmseResult {
    double linear = 0.0;                // mean over links
    double db = 0.0;                    // 10 log10(linear)
    std::vector<double> per_link;       // [num_links] in estimate order
};

// mean over length-M links of |est - truth|^2 / |truth|^2
NmseResult nmse(const CVec& estimate, const CVec& truth, int link_len);

double to_db(double linear);

}  // namespace cfdiff::est
