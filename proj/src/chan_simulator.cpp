#include "cfdiff/chan/simulator.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfdiff/error.hpp"

namespace cfdiff::chan {

namespace {

constexpr double kPi = std::numbers::pi;

Point ap_position(const Geometry& geo, int ap_index) {
    if (ap_index == 0) return geo.tx_ap;
    return geo.rx_aps.at(static_cast<std::size_t>(ap_index - 1));
}

}  // namespace

CVec steering_vector(double theta, int M) {
    if (M < 1) throw ConfigError("steering_vector: M must be >= 1, got " + std::to_string(M));
    CVec a(static_cast<std::size_t>(M));
    const double s = std::sin(theta);
    for (int m = 0; m < M; ++m) {
        const double phase = -kPi * m * s;
        a[m] = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

CVec sensing_channel(Complex alpha, double theta_r, double theta_t, int M) {
    const CVec ar = steering_vector(theta_r, M);
    const CVec at = steering_vector(theta_t, M);
    CVec h(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) h[i * M + j] = alpha * ar[i] * std::conj(at[j]);
    return h;
}

double pathloss_umi_db(double distance_m, double fc_ghz, double shadow_db) {
    if (!(distance_m > 0.0))
        throw InputError("pathloss_umi: non-positive distance " + std::to_string(distance_m));
    const double d = std::max(distance_m, 1.0);  // keep the log finite near an AP
    return 22.4 + 35.3 * std::log10(d) + 21.3 * std::log10(fc_ghz) + shadow_db;
}

double pathloss_gain(double pl_db) { return std::pow(10.0, -pl_db / 10.0); }

CVec rician_channel_at(double theta_los, double rician_k, double beta, int M, Rng& rng) {
    if (!(beta > 0.0))
        throw InputError("rician_channel: beta must be positive, got " + std::to_string(beta));
    if (rician_k < 0.0) throw InputError("rician_channel: K must be >= 0");
    const CVec a = steering_vector(theta_los, M);
    const double los = std::sqrt(rician_k / (rician_k + 1.0));
    const double nlos = std::sqrt(1.0 / (rician_k + 1.0));
    const double amp = std::sqrt(beta);
    CVec h(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        const Complex g = rng.complex_normal(1.0);
        h[m] = amp * (los * a[m] + nlos * g);
    }
    return h;
}

CVec rician_channel(const Geometry& geo, int ap_index, int ue_index, double rician_k,
                    double beta_lu, int M, Rng& rng) {
    const Point ap = ap_position(geo, ap_index);
    const Point ue = geo.ues.at(static_cast<std::size_t>(ue_index));
    return rician_channel_at(bearing(ap, ue), rician_k, beta_lu, M, rng);
}

double sensing_gain_variance(const Geometry& geo, int rx_index, double rcs_variance_m2,
                             double fc_ghz) {
    const double d_tx = distance(geo.tx_ap, geo.target);
    const double d_rx = distance(geo.rx_aps.at(static_cast<std::size_t>(rx_index)), geo.target);
    if (d_tx < 1e-6 || d_rx < 1e-6)
        throw InputError("sensing_gain: target collocated with an AP");
    const double g_tx = pathloss_gain(pathloss_umi_db(d_tx, fc_ghz, 0.0));
    const double g_rx = pathloss_gain(pathloss_umi_db(d_rx, fc_ghz, 0.0));
    return g_tx * g_rx * rcs_variance_m2;
}

Complex sensing_gain(const Geometry& geo, int rx_index, double rcs_variance_m2, double fc_ghz,
                     Rng& rng) {
    const double zeta2 = sensing_gain_variance(geo, rx_index, rcs_variance_m2, fc_ghz);
    if (zeta2 == 0.0) {
        rng.complex_normal(1.0);  // keep the draw order independent of rcs
        return {0.0, 0.0};
    }
    return rng.complex_normal(zeta2);
}

std::vector<int> assign_pilots(int num_ues, int pilot_length) {
    if (num_ues < 1 || pilot_length < 1)
        throw ConfigError("assign_pilots: counts must be >= 1");
    std::vector<int> s(static_cast<std::size_t>(num_ues));
    for (int u = 0; u < num_ues; ++u) s[u] = u % pilot_length;
    return s;
}

std::vector<double> calibrate_power(const std::vector<double>& beta, int L, int U,
                                    double target_snr_db, double noise_power_w,
                                    double max_power_w) {
    if (beta.size() != static_cast<std::size_t>(L) * U)
        throw DimensionError("calibrate_power: beta size " + std::to_string(beta.size()) +
                             " vs L*U = " + std::to_string(L * U));
    const double snr_lin = std::pow(10.0, target_snr_db / 10.0);
    std::vector<double> p(static_cast<std::size_t>(U));
    for (int u = 0; u < U; ++u) {
        double mean_beta = 0.0;
        for (int l = 0; l < L; ++l) mean_beta += beta[static_cast<std::size_t>(l) * U + u];
        mean_beta /= L;
        if (!(mean_beta > 0.0))
            throw InputError("calibrate_power: non-positive mean gain for UE " +
                             std::to_string(u));
        p[u] = std::min(max_power_w, noise_power_w * snr_lin / mean_beta);
    }
    return p;
}

Geometry sample_geometry(const ScenarioConfig& cfg, Rng& rng) {
    Geometry geo;
    geo.tx_ap = {0.0, cfg.area_height_m / 2.0};
    for (int i = 0; i < cfg.num_receive_aps; ++i) {
        geo.rx_aps.push_back(
            {cfg.area_width_m,
             cfg.area_height_m * static_cast<double>(i + 1) / (cfg.num_receive_aps + 1)});
    }
    // target over the central 80% so the UE disk mostly fits the area
    geo.target = {cfg.area_width_m * (0.1 + 0.8 * rng.uniform()),
                  cfg.area_height_m * (0.1 + 0.8 * rng.uniform())};
    for (int u = 0; u < cfg.num_ues; ++u) {
        Point pos{};
        bool placed = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            const double r = cfg.max_target_distance_m * std::sqrt(rng.uniform());
            const double phi = 2.0 * kPi * rng.uniform();
            pos = {geo.target.first + r * std::cos(phi), geo.target.second + r * std::sin(phi)};
            if (pos.first >= 0.0 && pos.first <= cfg.area_width_m && pos.second >= 0.0 &&
                pos.second <= cfg.area_height_m) {
                placed = true;
                break;
            }
        }
        if (!placed)
            throw NumericError("sample_geometry: UE placement failed; disk outside the area");
        geo.ues.push_back(pos);
    }
    geo.aod_to_target = bearing(geo.tx_ap, geo.target);
    for (const auto& rx : geo.rx_aps) geo.aoa_from_target.push_back(bearing(rx, geo.target));
    return geo;
}

PilotObservation received_pilots(const ChannelRealization& real, int tau_p, double noise_power_w,
                                 Rng& rng) {
    const int U = static_cast<int>(real.pilot_assignment.size());
    if (U < 1 || real.beta.empty() || real.h_comm.size() % real.beta.size() != 0)
        throw DimensionError("received_pilots: inconsistent realization shapes");
    const int M = static_cast<int>(real.h_comm.size() / real.beta.size());  // h_comm [L, U, M]
    const int L = static_cast<int>(real.beta.size()) / U;                   // beta [L, U]
    PilotObservation obs;
    obs.y.assign(static_cast<std::size_t>(L) * tau_p * M, Complex(0.0, 0.0));
    obs.noise.assign(obs.y.size(), Complex(0.0, 0.0));
    for (int l = 0; l < L; ++l) {
        for (int u = 0; u < U; ++u) {
            const int s = real.pilot_assignment[u];
            if (s < 0 || s >= tau_p)
                throw InputError("received_pilots: pilot index " + std::to_string(s) +
                                 " outside tau_p = " + std::to_string(tau_p));
            const double w = std::sqrt(tau_p * real.powers[u]);
            const Complex* h = real.h_comm.data() + (static_cast<std::size_t>(l) * U + u) * M;
            Complex* y = obs.y.data() + (static_cast<std::size_t>(l) * tau_p + s) * M;
            for (int m = 0; m < M; ++m) y[m] += w * h[m];
        }
    }
    for (std::size_t i = 0; i < obs.y.size(); ++i) {
        obs.noise[i] = rng.complex_normal(noise_power_w);
        obs.y[i] += obs.noise[i];
    }
    return obs;
}

CVec radar_probe(int M, int N) {
    if (M < 1 || N < 1) throw ConfigError("radar_probe: M and N must be >= 1");
    CVec x(static_cast<std::size_t>(M) * N);
    const double norm = 1.0 / std::sqrt(static_cast<double>(M));
    for (int n = 0; n < N; ++n) {
        const int col = n % M;
        for (int m = 0; m < M; ++m) {
            const double phase = -2.0 * kPi * m * col / M;
            x[static_cast<std::size_t>(m) * N + n] =
                norm * Complex(std::cos(phase), std::sin(phase));
        }
    }
    return x;
}

CVec received_radar(const ChannelRealization& real, const CVec& x_snapshots, int M, int N,
                    double noise_power_w, Rng& rng) {
    if (x_snapshots.size() != static_cast<std::size_t>(M) * N)
        throw DimensionError("received_radar: snapshots size " +
                             std::to_string(x_snapshots.size()) + " vs M*N = " +
                             std::to_string(M * N));
    for (int n = 0; n < N; ++n) {
        double p = 0.0;
        for (int m = 0; m < M; ++m) p += std::norm(x_snapshots[static_cast<std::size_t>(m) * N + n]);
        if (std::abs(p - 1.0) > 1e-6)
            throw InputError("received_radar: snapshot column " + std::to_string(n) +
                             " has power " + std::to_string(p) + ", expected 1");
    }
    const int Lr = static_cast<int>(real.alpha.size());
    if (real.h_sens.size() != static_cast<std::size_t>(Lr) * M * M)
        throw DimensionError("received_radar: sensing channel shape mismatch");
    CVec y(static_cast<std::size_t>(Lr) * M * N, Complex(0.0, 0.0));
    for (int r = 0; r < Lr; ++r) {
        const Complex* H = real.h_sens.data() + static_cast<std::size_t>(r) * M * M;
        Complex* yr = y.data() + static_cast<std::size_t>(r) * M * N;
        for (int i = 0; i < M; ++i)
            for (int k = 0; k < M; ++k) {
                const Complex h = H[i * M + k];
                const Complex* xr = x_snapshots.data() + static_cast<std::size_t>(k) * N;
                for (int n = 0; n < N; ++n) yr[static_cast<std::size_t>(i) * N + n] += h * xr[n];
            }
        for (int i = 0; i < M * N; ++i) yr[i] += rng.complex_normal(noise_power_w);
    }
    return y;
}

ChannelRealization generate_realization(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    const int L = cfg.num_aps, U = cfg.num_ues, M = cfg.antennas;

    ChannelRealization real;
    real.geometry = sample_geometry(cfg, rng);

    real.beta.assign(static_cast<std::size_t>(L) * U, 0.0);
    for (int l = 0; l < L; ++l)
        for (int u = 0; u < U; ++u) {
            const double dist = distance(ap_position(real.geometry, l), real.geometry.ues[u]);
            const double shadow = cfg.shadow_std_db * rng.normal();
            real.beta[static_cast<std::size_t>(l) * U + u] =
                pathloss_gain(pathloss_umi_db(dist, cfg.carrier_freq_ghz, shadow));
        }

    real.h_comm.assign(static_cast<std::size_t>(L) * U * M, Complex(0.0, 0.0));
    for (int l = 0; l < L; ++l)
        for (int u = 0; u < U; ++u) {
            const double theta = bearing(ap_position(real.geometry, l), real.geometry.ues[u]);
            const CVec h = rician_channel_at(theta, cfg.rician_k,
                                             real.beta[static_cast<std::size_t>(l) * U + u], M,
                                             rng);
            std::copy(h.begin(), h.end(),
                      real.h_comm.begin() + (static_cast<std::size_t>(l) * U + u) * M);
        }

    real.h_sens.assign(static_cast<std::size_t>(cfg.num_receive_aps) * M * M, Complex(0.0, 0.0));
    for (int r = 0; r < cfg.num_receive_aps; ++r) {
        real.alpha.push_back(
            sensing_gain(real.geometry, r, cfg.rcs_variance_m2, cfg.carrier_freq_ghz, rng));
        const CVec h = sensing_channel(real.alpha[r], real.geometry.aoa_from_target[r],
                                       real.geometry.aod_to_target, M);
        std::copy(h.begin(), h.end(), real.h_sens.begin() + static_cast<std::size_t>(r) * M * M);
    }

    real.pilot_assignment = assign_pilots(U, cfg.pilot_length);
    real.powers = calibrate_power(real.beta, L, U, cfg.target_snr_db, cfg.noise_power_w,
                                  cfg.max_power_w);
    return real;
}

}  // namespace cfdiff::chan
