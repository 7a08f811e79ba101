#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/data/dataset.hpp"
#include "cfdiff/ddm/diffusion.hpp"

namespace cfdiff::bench {

// Which scenario knob the sweep varies per grid point.
enum class SweepVariable { kSnr, kNumUes, kDistance };

SweepVariable sweep_variable_from_string(const std::string& name);  // ConfigError otherwise
std::string to_string(SweepVariable variable);

// One evaluation sweep: fresh scenarios per grid point, LS/MMSE always,
// TDDM/CDDM when a checkpoint path is given. Trial t reuses the same derived
// seed at every grid point (common random numbers), so curves differ only
// through the swept knob, not through resampling noise.
struct ExperimentSpec {
    SweepVariable variable = SweepVariable::kSnr;
    std::vector<double> grid;
    chan::ScenarioConfig scenario;  // fixed knobs; the swept one is overwritten
    std::string cddm_checkpoint;    // empty -> method skipped
    std::string tddm_checkpoint;    // empty -> method skipped
    int trials = 200;
    std::uint64_t seed = 1;
    // denoise start; nullopt -> per-UE noise-matched to the LS error level
    std::optional<int> start_step;

    void validate() const;  // grid non-empty, legal per-point scenarios
};

struct ResultRow {
    double grid_value = 0.0;
    std::string method;         // ls | mmse | tddm | cddm
    double nmse_db = 0.0;       // 10 log10(mean over trials of linear NMSE)
    double nmse_std_db = 0.0;   // sample std over trials of per-trial NMSE in dB
    int trials = 0;
};

// Grid points run concurrently (seeds are derived per trial, so scheduling
// cannot change results); rows come back in grid order, methods in the
// fixed order ls, mmse, tddm, cddm.
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec);

// header: grid,method,nmse_db,nmse_std_db,trials
std::string to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);

// Per-method aggregate over stored dataset samples (one "trial" per sample).
struct MethodSummary {
    std::string method;
    double nmse_db = 0.0;
    double nmse_std_db = 0.0;
    int count = 0;
};

// LS comes from the stored estimates, MMSE is recomputed from the stored
// pilot observation, and the models (either may be null) denoise every UE
// using the sample's sensing estimate and UE positions. start_step nullopt
// means per-UE noise-matched starts.
std::vector<MethodSummary> evaluate_samples(const data::Dataset& dataset,
                                            const std::vector<std::uint64_t>& ids,
                                            ddm::DiffusionModel* cddm, ddm::DiffusionModel* tddm,
                                            std::optional<int> start_step = std::nullopt);

// header: method,nmse_db,nmse_std_db,count
std::string to_csv(const std::vector<MethodSummary>& rows);
void write_csv(const std::vector<MethodSummary>& rows, const std::string& path);

// Throws ConfigError naming both sides when the checkpointed model and the
// scenario disagree on L, L_r, or M.
void check_compatible(const ddm::ModelConfig& model, const chan::ScenarioConfig& scenario);

// Denoises all U uplinks of one drawn world; h_ls is [L, U, M], the result
// has the same layout. Unconditioned models ignore the conditioning inputs.
chan::CVec denoise_all(ddm::DiffusionModel& model, const chan::CVec& h_ls,
                       const chan::CVec& h_sens_est, const std::vector<chan::Point>& ue_locations,
                       int num_aps, int num_ues, int antennas,
                       std::optional<int> start_step = std::nullopt);

// Same, but with one start step per UE (size must equal num_ues).
chan::CVec denoise_all(ddm::DiffusionModel& model, const chan::CVec& h_ls,
                       const chan::CVec& h_sens_est, const std::vector<chan::Point>& ue_locations,
                       int num_aps, int num_ues, int antennas,
                       const std::vector<int>& per_ue_starts);

}  // namespace cfdiff::bench
