#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "cfdiff/chan/simulator.hpp"
#include "cfdiff/error.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;
using namespace cfdiff::chan;

namespace {

constexpr double kPi = std::numbers::pi;

ScenarioConfig desk_config() {
    ScenarioConfig cfg;
    cfg.antennas = 4;
    cfg.num_ues = 4;
    cfg.pilot_length = 4;
    cfg.radar_snapshots = 16;
    return cfg;
}

double second_singular_ratio(const CVec& h, int M) {
    Eigen::MatrixXcd A(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) A(i, j) = h[static_cast<std::size_t>(i) * M + j];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues()(1) / svd.singularValues()(0);
}

}  // namespace

TEST_CASE("steering vector: broadside, endfire, and modulus") {
    auto a0 = steering_vector(0.0, 4);
    for (const auto& v : a0) {
        CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(v.imag()) <= 1e-15);
    }

    // theta = pi/2: entry m = exp(-j pi m) -> [1, -1]
    auto a1 = steering_vector(kPi / 2.0, 2);
    CHECK(a1[0].real() == doctest::Approx(1.0));
    CHECK(a1[1].real() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(a1[1].imag()) <= 1e-12);

    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        auto a = steering_vector(rng.uniform(-kPi, kPi), 8);
        CHECK(a[0] == Complex(1.0, 0.0));
        for (const auto& v : a) CHECK(std::abs(std::abs(v) - 1.0) <= 1e-14);
    }

    CHECK_THROWS_AS(steering_vector(0.1, 0), ConfigError);
}

TEST_CASE("sensing channel: outer-product structure") {
    auto ones = sensing_channel(Complex(1.0, 0.0), 0.0, 0.0, 3);
    for (const auto& v : ones) {
        CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(v.imag()) <= 1e-15);
    }

    auto zero = sensing_channel(Complex(0.0, 0.0), 0.7, -0.2, 4);
    for (const auto& v : zero) CHECK(std::abs(v) == 0.0);

    // [DERIVED: SVD oracle] rank-1 and Frobenius norm |alpha| * M
    Rng rng(22);
    for (int i = 0; i < 10; ++i) {
        const Complex alpha(rng.normal(), rng.normal());
        auto h = sensing_channel(alpha, rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), 4);
        CHECK(second_singular_ratio(h, 4) < 1e-12);
        double fro = 0.0;
        for (const auto& v : h) fro += std::norm(v);
        CHECK(std::abs(std::sqrt(fro) - std::abs(alpha) * 4.0) <= 1e-9);
    }
}

TEST_CASE("UMi path loss arithmetic") {
    CHECK(pathloss_umi_db(1.0, 1.0, 0.0) == doctest::Approx(22.4).epsilon(1e-14));
    // [DERIVED: 22.4 + 35.3 + 21.3 log10(28)]
    CHECK(pathloss_umi_db(10.0, 28.0, 0.0) ==
          doctest::Approx(22.4 + 35.3 + 21.3 * std::log10(28.0)).epsilon(1e-14));
    CHECK(pathloss_umi_db(10.0, 28.0, 0.0) == doctest::Approx(88.52).epsilon(1e-4));
    CHECK(pathloss_umi_db(5.0, 2.0, 3.0) - pathloss_umi_db(5.0, 2.0, 0.0) ==
          doctest::Approx(3.0).epsilon(1e-14));
    // sub-meter distances clamp to the 1 m value
    CHECK(pathloss_umi_db(0.2, 28.0, 0.0) == pathloss_umi_db(1.0, 28.0, 0.0));
    CHECK_THROWS_AS(pathloss_umi_db(0.0, 28.0, 0.0), InputError);
    CHECK(pathloss_gain(10.0) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("rician channel: LOS limit and Monte Carlo moments") {
    const int M = 4;
    const double beta = 2.5;

    // K -> infinity: deterministic LOS direction, |h|^2 = beta * M
    Rng rng(23);
    auto h = rician_channel_at(0.3, 1e12, beta, M, rng);
    auto a = steering_vector(0.3, M);
    double pow_h = 0.0;
    for (int m = 0; m < M; ++m) {
        pow_h += std::norm(h[m]);
        CHECK(std::abs(h[m] - std::sqrt(beta) * a[m]) <= 1e-3 * std::sqrt(beta));
    }
    CHECK(std::abs(pow_h - beta * M) / (beta * M) <= 1e-6);

    // [DERIVED: Monte-Carlo oracle] K = 0 zero mean
    {
        Rng mc(24);
        Complex mean(0.0, 0.0);
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            auto hh = rician_channel_at(0.7, 0.0, beta, 1, mc);
            mean += hh[0];
        }
        mean /= static_cast<double>(n);
        CHECK(std::abs(mean) < 0.02 * std::sqrt(beta));
    }

    // [DERIVED: Monte-Carlo oracle] E|h|^2 = beta * M for K = 10
    {
        Rng mc(25);
        double tot = 0.0;
        const int n = 25000;
        for (int i = 0; i < n; ++i) {
            auto hh = rician_channel_at(-0.4, 10.0, beta, M, mc);
            for (const auto& v : hh) tot += std::norm(v);
        }
        const double ratio = tot / n / (beta * M);
        CHECK(ratio > 0.98);
        CHECK(ratio < 1.02);
    }

    CHECK_THROWS_AS(rician_channel_at(0.0, 10.0, 0.0, M, rng), InputError);
}

TEST_CASE("sensing gain: path-loss scaling and Monte Carlo variance") {
    Geometry geo;
    geo.tx_ap = {0.0, 50.0};
    geo.rx_aps = {{100.0, 50.0}};
    geo.target = {20.0, 50.0};

    Rng rng(26);
    CHECK(std::abs(sensing_gain(geo, 0, 0.0, 28.0, rng)) == 0.0);

    // doubling the tx leg scales zeta^2 by -35.3 log10(2) dB
    Geometry geo2 = geo;
    geo2.target = {40.0, 50.0};
    const double z1 = sensing_gain_variance(geo, 0, 1.0, 28.0);
    // rebuild with same rx distance: move the rx so its leg is unchanged
    geo2.rx_aps[0] = {40.0 + 80.0, 50.0};
    const double z2 = sensing_gain_variance(geo2, 0, 1.0, 28.0);
    CHECK(10.0 * std::log10(z2 / z1) == doctest::Approx(-35.3 * std::log10(2.0)).epsilon(1e-10));

    // [DERIVED: Monte-Carlo oracle]
    double var = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) var += std::norm(sensing_gain(geo, 0, 1.0, 28.0, rng));
    const double want = sensing_gain_variance(geo, 0, 1.0, 28.0);
    CHECK(std::abs(var / n - want) / want < 0.03);

    Geometry bad = geo;
    bad.target = bad.tx_ap;
    CHECK_THROWS_AS(sensing_gain_variance(bad, 0, 1.0, 28.0), InputError);
}

TEST_CASE("pilot assignment is round-robin") {
    CHECK(assign_pilots(4, 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(assign_pilots(8, 4) == std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3});
    auto s = assign_pilots(5, 4);
    CHECK(s[0] == 0);
    CHECK(s[4] == 0);  // pilot 0 shared by UEs {0, 4}
    CHECK_THROWS_AS(assign_pilots(0, 4), ConfigError);
}

TEST_CASE("power calibration: ratio, linear scaling, clipping") {
    const double sigma2 = 1e-13;
    std::vector<double> beta = {sigma2, sigma2};  // L = 2, U = 1, mean = sigma2
    auto p0 = calibrate_power(beta, 2, 1, 0.0, sigma2, 4.0);
    CHECK(p0[0] == doctest::Approx(1.0).epsilon(1e-14));
    auto p10 = calibrate_power(beta, 2, 1, 10.0, sigma2, 40.0);
    CHECK(p10[0] == doctest::Approx(10.0 * p0[0]).epsilon(1e-12));
    // clipping at P_max
    auto pc = calibrate_power(beta, 2, 1, 30.0, sigma2, 4.0);
    CHECK(pc[0] == 4.0);

    // unclipped: achieved mean-over-APs SNR equals the target exactly
    std::vector<double> beta2 = {3e-13, 1e-13, 2e-13, 6e-13};  // [L=2, U=2]
    auto p = calibrate_power(beta2, 2, 2, 7.0, sigma2, 1e6);
    for (int u = 0; u < 2; ++u) {
        const double mean_beta = (beta2[u] + beta2[2 + u]) / 2.0;
        CHECK(10.0 * std::log10(p[u] * mean_beta / sigma2) == doctest::Approx(7.0).epsilon(1e-12));
    }
}

TEST_CASE("received pilots: despreading algebra") {
    const int M = 3;
    ChannelRealization real;
    real.pilot_assignment = {0, 1};
    real.powers = {0.5, 2.0};
    real.beta = {1.0, 1.0};  // L = 1, U = 2
    Rng rng(27);
    real.h_comm.resize(2 * M);
    for (auto& v : real.h_comm) v = rng.complex_normal(1.0);

    // orthogonal pilots, zero noise: y = sqrt(tau_p p_u) h exactly
    auto obs = received_pilots(real, 2, 0.0, rng);
    for (int u = 0; u < 2; ++u)
        for (int m = 0; m < M; ++m) {
            const Complex want = std::sqrt(2.0 * real.powers[u]) * real.h_comm[u * M + m];
            CHECK(std::abs(obs.y[u * M + m] - want) <= 1e-15);
        }

    // shared pilot, equal powers: y = sqrt(tau_p p) (h1 + h2)
    real.pilot_assignment = {0, 0};
    real.powers = {0.5, 0.5};
    auto obs2 = received_pilots(real, 2, 0.0, rng);
    for (int m = 0; m < M; ++m) {
        const Complex want = std::sqrt(1.0) * (real.h_comm[m] + real.h_comm[M + m]);
        CHECK(std::abs(obs2.y[m] - want) <= 1e-15);
        CHECK(std::abs(obs2.y[M + m]) == 0.0);  // unused pilot slot stays empty
    }

    // [DERIVED: Monte-Carlo oracle] noise-only variance
    real.powers = {0.0, 0.0};
    double var = 0.0;
    int count = 0;
    const double sigma2 = 0.3;
    for (int trial = 0; trial < 20000; ++trial) {
        auto o = received_pilots(real, 2, sigma2, rng);
        for (const auto& v : o.y) {
            var += std::norm(v);
            ++count;
        }
    }
    CHECK(std::abs(var / count - sigma2) / sigma2 < 0.03);
}

TEST_CASE("despreading separation: one UE touches one pilot slice") {
    auto cfg = desk_config();
    cfg.num_ues = 5;
    cfg.pilot_length = 4;
    Rng rng(28);
    auto real = generate_realization(cfg, rng);

    Rng noise_rng(29);
    auto obs1 = received_pilots(real, cfg.pilot_length, 0.0, noise_rng);
    // perturb UE 2's channel (pilot index 2) at every AP
    auto real2 = real;
    const int U = cfg.num_ues, M = cfg.antennas;
    for (int l = 0; l < cfg.num_aps; ++l)
        real2.h_comm[(static_cast<std::size_t>(l) * U + 2) * M] += Complex(1.0, -0.5);
    Rng noise_rng2(29);
    auto obs2 = received_pilots(real2, cfg.pilot_length, 0.0, noise_rng2);

    for (int l = 0; l < cfg.num_aps; ++l)
        for (int s = 0; s < cfg.pilot_length; ++s)
            for (int m = 0; m < M; ++m) {
                const auto d = obs1.y[(static_cast<std::size_t>(l) * cfg.pilot_length + s) * M + m] -
                               obs2.y[(static_cast<std::size_t>(l) * cfg.pilot_length + s) * M + m];
                if (s == 2)
                    continue;  // the touched slice may change
                CHECK(std::abs(d) == 0.0);
            }
}

TEST_CASE("radar probe and received radar signal") {
    const int M = 4, N = 16;
    auto x = radar_probe(M, N);
    for (int n = 0; n < N; ++n) {
        double p = 0.0;
        for (int m = 0; m < M; ++m) p += std::norm(x[static_cast<std::size_t>(m) * N + n]);
        CHECK(std::abs(p - 1.0) <= 1e-12);
    }
    // X X^H = (N / M) I
    Eigen::MatrixXcd X(M, N);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) X(m, n) = x[static_cast<std::size_t>(m) * N + n];
    Eigen::MatrixXcd gram = X * X.adjoint();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const double want = i == j ? static_cast<double>(N) / M : 0.0;
            CHECK(std::abs(gram(i, j) - want) <= 1e-12);
        }

    ChannelRealization real;
    const Complex alpha(0.8, -0.3);
    const double theta_r = 0.45, theta_t = -0.8;
    real.alpha = {alpha};
    real.h_sens = sensing_channel(alpha, theta_r, theta_t, M);

    // single snapshot along the transmit steering direction
    auto at = steering_vector(theta_t, M);
    CVec x1(M);
    for (int m = 0; m < M; ++m) x1[m] = at[m] / std::sqrt(static_cast<double>(M));
    Rng rng(30);
    auto y = received_radar(real, x1, M, 1, 0.0, rng);
    auto ar = steering_vector(theta_r, M);
    for (int m = 0; m < M; ++m) {
        const Complex want = alpha * std::sqrt(static_cast<double>(M)) * ar[m];
        CHECK(std::abs(y[m] - want) <= 1e-12);
    }

    // snapshot orthogonal to a(theta_t) excites nothing
    CVec xo(2);
    auto at2 = steering_vector(theta_t, 2);
    xo[0] = 1.0 / std::sqrt(2.0);
    xo[1] = -at2[1] / std::sqrt(2.0);
    ChannelRealization real2;
    real2.alpha = {alpha};
    real2.h_sens = sensing_channel(alpha, theta_r, theta_t, 2);
    auto y2 = received_radar(real2, xo, 2, 1, 0.0, rng);
    for (const auto& v : y2) CHECK(std::abs(v) <= 1e-15);

    // zero channel: output is pure noise of per-entry variance sigma^2
    ChannelRealization noise_real;
    noise_real.alpha = {Complex(0.0, 0.0)};
    noise_real.h_sens.assign(static_cast<std::size_t>(M) * M, Complex(0.0, 0.0));
    double var = 0.0;
    int cnt = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        auto yn = received_radar(noise_real, x, M, N, 0.25, rng);
        for (const auto& v : yn) {
            var += std::norm(v);
            ++cnt;
        }
    }
    CHECK(std::abs(var / cnt - 0.25) / 0.25 < 0.03);

    // non-unit snapshot power rejected
    CVec bad = x;
    bad[0] *= 3.0;
    CHECK_THROWS_AS(received_radar(real, bad, M, N, 0.0, rng), InputError);
}

TEST_CASE("generate_realization: invariants and determinism") {
    auto cfg = desk_config();
    cfg.num_ues = 6;
    cfg.pilot_length = 4;
    cfg.max_target_distance_m = 10.0;
    cfg.target_snr_db = 5.0;

    Rng r1(31), r2(31);
    auto a = generate_realization(cfg, r1);
    auto b = generate_realization(cfg, r2);

    // bit-identical under identical seeds
    REQUIRE(a.h_comm.size() == b.h_comm.size());
    for (std::size_t i = 0; i < a.h_comm.size(); ++i) CHECK(a.h_comm[i] == b.h_comm[i]);
    for (std::size_t i = 0; i < a.h_sens.size(); ++i) CHECK(a.h_sens[i] == b.h_sens[i]);
    for (std::size_t i = 0; i < a.beta.size(); ++i) CHECK(a.beta[i] == b.beta[i]);
    for (std::size_t i = 0; i < a.powers.size(); ++i) CHECK(a.powers[i] == b.powers[i]);

    // geometry anchors
    CHECK(a.geometry.tx_ap.first == 0.0);
    CHECK(a.geometry.tx_ap.second == 50.0);
    REQUIRE(a.geometry.rx_aps.size() == 2);
    for (const auto& rx : a.geometry.rx_aps) CHECK(rx.first == 100.0);

    // every UE within d of the target and inside the area
    for (const auto& ue : a.geometry.ues) {
        CHECK(distance(ue, a.geometry.target) <= cfg.max_target_distance_m + 1e-12);
        CHECK(ue.first >= 0.0);
        CHECK(ue.first <= cfg.area_width_m);
        CHECK(ue.second >= 0.0);
        CHECK(ue.second <= cfg.area_height_m);
    }

    // sensing slices rank-1 with Frobenius norm |alpha| M
    const int M = cfg.antennas;
    for (int r = 0; r < cfg.num_receive_aps; ++r) {
        CVec slice(a.h_sens.begin() + static_cast<std::size_t>(r) * M * M,
                   a.h_sens.begin() + static_cast<std::size_t>(r + 1) * M * M);
        CHECK(second_singular_ratio(slice, M) < 1e-12);
        double fro = 0.0;
        for (const auto& v : slice) fro += std::norm(v);
        CHECK(std::abs(std::sqrt(fro) - std::abs(a.alpha[r]) * M) <=
              1e-9 * std::abs(a.alpha[r]) * M);
    }

    // positive gains, bounded powers
    for (double bta : a.beta) CHECK(bta > 0.0);
    for (double p : a.powers) {
        CHECK(p > 0.0);
        CHECK(p <= cfg.max_power_w);
    }

    // different seed, different world
    Rng r3(32);
    auto c = generate_realization(cfg, r3);
    CHECK(a.h_comm[0] != c.h_comm[0]);
}

TEST_CASE("path loss gain decreases with distance at fixed shadowing") {
    double prev = 1e9;
    for (double d : {1.0, 2.0, 5.0, 17.0, 60.0, 140.0}) {
        const double g = pathloss_gain(pathloss_umi_db(d, 28.0, 1.3));
        CHECK(g > 0.0);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("scenario validation catches bad configs") {
    ScenarioConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.num_aps = 5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.pilot_length = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.radar_snapshots = 4;  // below antennas
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.noise_power_w = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    SampleRanges r;
    CHECK_NOTHROW(r.validate());
    r.pilot_lengths.clear();
    CHECK_THROWS_AS(r.validate(), ConfigError);
}
