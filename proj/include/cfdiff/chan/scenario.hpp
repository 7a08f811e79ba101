#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace cfdiff::chan {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using Point = std::pair<double, double>;  // (x, y) meters

// Concrete recipe for one drawn world. Dataset generation varies the
// per-sample knobs (num_ues, pilot_length, max_target_distance, target_snr)
// inside SampleRanges; sweeps override them per grid point.
struct ScenarioConfig {
    double area_width_m = 100.0;
    double area_height_m = 100.0;
    int num_aps = 3;          // L, one transmitting + num_receive_aps receiving
    int num_receive_aps = 2;  // L_r
    int antennas = 8;         // M per AP
    int num_ues = 8;          // U
    int pilot_length = 8;     // tau_p
    double max_target_distance_m = 10.0;  // d: UE placement radius around target
    double carrier_freq_ghz = 28.0;
    double rician_k = 10.0;
    double target_snr_db = 0.0;
    double max_power_w = 4.0;       // P_max
    double noise_power_w = 1e-13;   // sigma^2 at the comm receiver
    // the radar chain integrates long probes, so its effective noise floor
    // sits far below the comm one; without this the two-leg 28 GHz path loss
    // would bury every echo
    double radar_noise_power_w = 1e-25;
    double rcs_variance_m2 = 1.0;
    double shadow_std_db = 7.82;
    int radar_snapshots = 16;  // N >= M keeps the probe invertible
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError on violated invariants
};

// Ranges the dataset generator draws per-sample knobs from.
struct SampleRanges {
    int num_ues_lo = 3;
    int num_ues_hi = 9;
    std::vector<int> pilot_lengths = {4, 8};
    double max_target_distance_lo_m = 2.5;
    double max_target_distance_hi_m = 20.0;
    double target_snr_lo_db = 0.0;
    double target_snr_hi_db = 10.0;

    void validate() const;
};

struct Geometry {
    Point tx_ap;                 // (0, height/2)
    std::vector<Point> rx_aps;   // x = width, evenly spread in y
    std::vector<Point> ues;
    Point target;
    double aod_to_target = 0.0;              // bearing tx AP -> target
    std::vector<double> aoa_from_target;     // bearing rx AP -> target, per rx AP
};

inline double distance(const Point& a, const Point& b) {
    const double dx = a.first - b.first, dy = a.second - b.second;
    return std::sqrt(dx * dx + dy * dy);
}

// bearing of `to` seen from `from`, measured against the array broadside (+x);
// ULAs run along the y-axis, so only sin(theta) = dy/dist enters the phases
double bearing(const Point& from, const Point& to);

}  // namespace cfdiff::chan
