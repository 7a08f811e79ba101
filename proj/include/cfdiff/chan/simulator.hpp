#pragma once

#include <vector>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff::chan {

// One drawn world: geometry, large-scale gains, channels, pilots, powers.
// Array layouts are row-major: h_comm [L][U][M], h_sens [L_r][M][M].
struct ChannelRealization {
    CVec h_comm;                       // [L, U, M]
    CVec h_sens;                       // [L_r, M, M], each slice rank-1
    std::vector<Complex> alpha;        // [L_r] sensing gains
    std::vector<double> beta;          // [L, U] linear large-scale gains
    Geometry geometry;
    std::vector<int> pilot_assignment; // [U], values in [0, tau_p)
    std::vector<double> powers;        // [U] watts, <= P_max
};

struct PilotObservation {
    CVec y;      // [L, tau_p, M]
    CVec noise;  // same shape, the realized noise term
};

// entry m = exp(-j pi m sin(theta)), half-wavelength ULA
CVec steering_vector(double theta, int M);

// alpha * a(theta_r) a^H(theta_t), M x M row-major
CVec sensing_channel(Complex alpha, double theta_r, double theta_t, int M);

// 22.4 + 35.3 log10(dist) + 21.3 log10(f_c) + shadow, distance clamped at 1 m
double pathloss_umi_db(double distance_m, double fc_ghz, double shadow_db);
// linear power gain 10^(-pl_db/10)
double pathloss_gain(double pl_db);

// h = sqrt(beta) (sqrt(K/(K+1)) a(theta_los) + sqrt(1/(K+1)) g), g ~ CN(0, I)
CVec rician_channel_at(double theta_los, double rician_k, double beta, int M, Rng& rng);
// same, with theta_los derived from the geometry for AP l and UE u
CVec rician_channel(const Geometry& geo, int ap_index, int ue_index, double rician_k,
                    double beta_lu, int M, Rng& rng);

// variance zeta^2 of the sensing gain: shadow-free two-leg path loss times RCS
double sensing_gain_variance(const Geometry& geo, int rx_index, double rcs_variance_m2,
                             double fc_ghz);
Complex sensing_gain(const Geometry& geo, int rx_index, double rcs_variance_m2, double fc_ghz,
                     Rng& rng);

// round-robin s_u = u mod tau_p
std::vector<int> assign_pilots(int num_ues, int pilot_length);

// p_u = min(P_max, sigma^2 * snr_lin / mean_l beta[l][u]); beta is [L, U]
std::vector<double> calibrate_power(const std::vector<double>& beta, int L, int U,
                                    double target_snr_db, double noise_power_w, double max_power_w);

Geometry sample_geometry(const ScenarioConfig& cfg, Rng& rng);

// y[l][s] = sum_{i: s_i = s} sqrt(tau_p p_i) h_comm[l][i] + n, n ~ CN(0, sigma^2 I)
PilotObservation received_pilots(const ChannelRealization& real, int tau_p, double noise_power_w,
                                 Rng& rng);

// unit-norm DFT probe columns, cycled over N snapshots; [M, N] row-major
CVec radar_probe(int M, int N);

// y[l_r] = H_sens[l_r] X + noise, X [M, N] with unit-norm columns -> [L_r, M, N]
CVec received_radar(const ChannelRealization& real, const CVec& x_snapshots, int M, int N,
                    double noise_power_w, Rng& rng);

// Full world draw. Consumes rng in a fixed documented order:
// geometry, shadowing/beta (AP-major), Rician scatter per (AP, UE), sensing
// gains per rx AP. Powers and pilot assignment are deterministic given those.
ChannelRealization generate_realization(const ScenarioConfig& cfg, Rng& rng);

}  // namespace cfdiff::chan
