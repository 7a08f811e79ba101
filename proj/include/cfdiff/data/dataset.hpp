#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/chan/simulator.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff::data {

// One fully drawn scenario: world, pilot observation, and the classical
// estimates the model consumes. Arrays are row-major with the layouts noted.
struct Sample {
    std::uint64_t sample_id = 0;
    chan::ScenarioConfig scenario;  // concrete knobs + the per-sample seed

    chan::CVec h_comm;      // [L, U, M] truth
    chan::CVec y_pilot;     // [L, tau_p, M] despread pilot observation
    chan::CVec h_ls;        // [L, U, M]
    chan::CVec h_sens_est;  // [L_r, M, M]

    std::vector<double> beta;            // [L, U] large-scale gains
    std::vector<chan::Point> ue_locations;
    chan::Point target_location{0.0, 0.0};
    std::vector<int> pilot_assignment;   // [U]
    std::vector<double> powers;          // [U] watts

    void validate() const;  // finite arrays, shapes consistent with scenario
};

struct DatasetManifest {
    std::uint32_t format_version = 1;
    std::uint64_t root_seed = 0;
    std::uint64_t num_samples = 0;
    std::uint64_t train_count = 0;
    std::uint64_t val_count = 0;
    std::uint64_t test_count = 0;
    double normalization_scale = 1.0;  // train-split RMS of h_comm components
    double sensing_scale = 1.0;        // train-split RMS of h_sens_est components
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<Sample> samples;             // indexed by sample_id
    std::vector<std::uint64_t> split_order;  // shuffled ids; contiguous blocks

    std::vector<std::uint64_t> train_ids() const;
    std::vector<std::uint64_t> val_ids() const;
    std::vector<std::uint64_t> test_ids() const;
};

// Draws n_samples worlds. Per sample, a child rng seeded from
// (root_seed, Stream::kSample, id) drives, in order: the scenario knobs
// (U, tau_p, d, SNR from `ranges`), the world realization, pilot noise, and
// radar noise. The split shuffle uses (root_seed, Stream::kSplit, 0).
Dataset generate_dataset(const chan::ScenarioConfig& base, const chan::SampleRanges& ranges,
                         std::uint64_t n_samples, std::uint64_t root_seed);

// RMS over the real and imaginary components of h_comm across the given
// sample ids. Throws NumericError when the data is all-zero or non-finite.
double normalization_scale(const Dataset& dataset, const std::vector<std::uint64_t>& ids);
// Same measure over h_sens_est.
double sensing_scale(const Dataset& dataset, const std::vector<std::uint64_t>& ids);

// dir/dataset.manifest (text) + dir/dataset.bin (little-endian binary).
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace cfdiff::data
