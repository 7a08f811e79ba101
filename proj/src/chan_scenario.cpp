#include "cfdiff/chan/scenario.hpp"

#include <cmath>
#include <string>

#include "cfdiff/error.hpp"

namespace cfdiff::chan {

void ScenarioConfig::validate() const {
    if (area_width_m <= 0 || area_height_m <= 0)
        throw ConfigError("scenario: area dimensions must be positive");
    if (num_aps != num_receive_aps + 1)
        throw ConfigError("scenario: num_aps (" + std::to_string(num_aps) +
                          ") must equal num_receive_aps + 1 (" +
                          std::to_string(num_receive_aps + 1) + ")");
    if (num_receive_aps < 1) throw ConfigError("scenario: need at least one receiving AP");
    if (antennas < 1) throw ConfigError("scenario: antennas must be >= 1");
    if (num_ues < 1) throw ConfigError("scenario: num_ues must be >= 1");
    if (pilot_length < 1) throw ConfigError("scenario: pilot_length must be >= 1");
    if (max_target_distance_m <= 0)
        throw ConfigError("scenario: max_target_distance must be positive");
    if (carrier_freq_ghz <= 0) throw ConfigError("scenario: carrier_freq must be positive");
    if (rician_k < 0) throw ConfigError("scenario: rician_k must be >= 0");
    if (max_power_w <= 0 || noise_power_w <= 0 || radar_noise_power_w <= 0)
        throw ConfigError("scenario: powers must be positive");
    if (rcs_variance_m2 < 0) throw ConfigError("scenario: rcs_variance must be >= 0");
    if (shadow_std_db < 0) throw ConfigError("scenario: shadow_std must be >= 0");
    if (radar_snapshots < antennas)
        throw ConfigError("scenario: radar_snapshots (" + std::to_string(radar_snapshots) +
                          ") must be >= antennas (" + std::to_string(antennas) +
                          ") for an invertible probe");
}

void SampleRanges::validate() const {
    if (num_ues_lo < 1 || num_ues_hi < num_ues_lo)
        throw ConfigError("ranges: invalid num_ues range");
    if (pilot_lengths.empty()) throw ConfigError("ranges: pilot_lengths must be non-empty");
    for (int t : pilot_lengths)
        if (t < 1) throw ConfigError("ranges: pilot lengths must be >= 1");
    if (max_target_distance_lo_m <= 0 || max_target_distance_hi_m < max_target_distance_lo_m)
        throw ConfigError("ranges: invalid max_target_distance range");
    if (target_snr_hi_db < target_snr_lo_db) throw ConfigError("ranges: invalid target_snr range");
}

double bearing(const Point& from, const Point& to) {
    return std::atan2(to.second - from.second, to.first - from.first);
}

}  // namespace cfdiff::chan
