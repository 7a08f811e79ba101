#include "cfdiff/bench/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <memory>
#include <utility>

#include "cfdiff/error.hpp"
#include "cfdiff/est/estimators.hpp"
#include "cfdiff/io/config.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff::bench {

SweepVariable sweep_variable_from_string(const std::string& name) {
    if (name == "snr") return SweepVariable::kSnr;
    if (name == "num_ues") return SweepVariable::kNumUes;
    if (name == "distance") return SweepVariable::kDistance;
    throw ConfigError("unknown sweep variable '" + name +
                      "' (expected snr, num_ues, or distance)");
}

std::string to_string(SweepVariable variable) {
    switch (variable) {
        case SweepVariable::kSnr: return "snr";
        case SweepVariable::kNumUes: return "num_ues";
        case SweepVariable::kDistance: return "distance";
    }
    throw InputError("invalid sweep variable value");
}

namespace {

chan::ScenarioConfig apply_variable(chan::ScenarioConfig cfg, SweepVariable variable,
                                    double value) {
    switch (variable) {
        case SweepVariable::kSnr:
            cfg.target_snr_db = value;
            break;
        case SweepVariable::kNumUes: {
            const long long u = std::llround(value);
            if (std::abs(value - static_cast<double>(u)) > 1e-9)
                throw ConfigError("num_ues sweep needs integer grid values, got " +
                                  io::Config::format_real(value));
            cfg.num_ues = static_cast<int>(u);
            break;
        }
        case SweepVariable::kDistance:
            cfg.max_target_distance_m = value;
            break;
    }
    return cfg;
}

// mean linear NMSE in dB plus the sample std of the per-trial dB values
void summarize(const std::vector<double>& linear, double& mean_db, double& std_db) {
    const std::size_t n = linear.size();
    double mean = 0.0;
    for (double v : linear) mean += v;
    mean /= static_cast<double>(n);
    mean_db = est::to_db(mean);

    std_db = 0.0;
    if (n > 1) {
        std::vector<double> db(n);
        double db_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            db[i] = est::to_db(linear[i]);
            db_mean += db[i];
        }
        db_mean /= static_cast<double>(n);
        double acc = 0.0;
        for (double v : db) acc += (v - db_mean) * (v - db_mean);
        std_db = std::sqrt(acc / static_cast<double>(n - 1));
    }
}

struct MethodAccum {
    std::string method;
    std::vector<double> linear;
};

std::unique_ptr<ddm::DiffusionModel> load_checked(const std::string& path,
                                                  const chan::ScenarioConfig& cfg) {
    auto loaded = ddm::load_model(path);
    check_compatible(loaded.model->config(), cfg);
    return std::move(loaded.model);
}

// one start step per UE, matched to that UE's LS error level in the model's
// normalized units (real-component variance = complex variance / (2 s^2))
std::vector<int> noise_matched_starts(const ddm::DiffusionModel& model,
                                      const std::vector<int>& assignment,
                                      const std::vector<double>& powers,
                                      const std::vector<double>& beta, int tau_p, int num_aps,
                                      int num_ues, double noise_power_w) {
    const double s = model.config().normalization_scale;
    std::vector<int> starts(static_cast<std::size_t>(num_ues));
    for (int u = 0; u < num_ues; ++u) {
        const double var =
            est::ls_error_variance(assignment, powers, beta, tau_p, num_aps, u, noise_power_w) /
            (2.0 * s * s);
        starts[static_cast<std::size_t>(u)] = model.noise_matched_start(var);
    }
    return starts;
}

std::vector<ResultRow> evaluate_point(const ExperimentSpec& spec, double grid_value) {
    const chan::ScenarioConfig cfg = apply_variable(spec.scenario, spec.variable, grid_value);
    cfg.validate();

    std::unique_ptr<ddm::DiffusionModel> tddm, cddm;
    if (!spec.tddm_checkpoint.empty()) tddm = load_checked(spec.tddm_checkpoint, cfg);
    if (!spec.cddm_checkpoint.empty()) cddm = load_checked(spec.cddm_checkpoint, cfg);

    const int L = cfg.num_aps, M = cfg.antennas, U = cfg.num_ues;
    const int tau_p = cfg.pilot_length, N = cfg.radar_snapshots, Lr = cfg.num_receive_aps;
    const chan::CVec probe = chan::radar_probe(M, N);

    std::vector<MethodAccum> methods;
    methods.push_back({"ls", {}});
    methods.push_back({"mmse", {}});
    if (tddm) methods.push_back({"tddm", {}});
    if (cddm) methods.push_back({"cddm", {}});

    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng = Rng(spec.seed).derive(Stream::kTrial, static_cast<std::uint64_t>(trial));
        const auto real = chan::generate_realization(cfg, rng);
        const auto obs = chan::received_pilots(real, tau_p, cfg.noise_power_w, rng);
        const chan::CVec h_ls =
            est::ls_estimate(obs, real.pilot_assignment, real.powers, tau_p, L, M);

        std::size_t slot = 0;
        methods[slot++].linear.push_back(est::nmse(h_ls, real.h_comm, M).linear);
        const chan::CVec h_mmse = est::mmse_estimate(obs, real.pilot_assignment, real.powers,
                                                     real.beta, tau_p, L, M, cfg.noise_power_w);
        methods[slot++].linear.push_back(est::nmse(h_mmse, real.h_comm, M).linear);

        if (tddm || cddm) {
            const chan::CVec y_radar =
                chan::received_radar(real, probe, M, N, cfg.radar_noise_power_w, rng);
            chan::CVec h_sens_est(static_cast<std::size_t>(Lr) * M * M);
            for (int r = 0; r < Lr; ++r) {
                const chan::CVec y(y_radar.begin() + static_cast<std::size_t>(r) * M * N,
                                   y_radar.begin() + static_cast<std::size_t>(r + 1) * M * N);
                const chan::CVec h = est::sensing_ls(y, probe, M, N);
                std::copy(h.begin(), h.end(),
                          h_sens_est.begin() + static_cast<std::size_t>(r) * M * M);
            }
            for (auto* model : {tddm.get(), cddm.get()}) {
                if (!model) continue;
                const std::vector<int> starts =
                    spec.start_step
                        ? std::vector<int>(static_cast<std::size_t>(U), *spec.start_step)
                        : noise_matched_starts(*model, real.pilot_assignment, real.powers,
                                               real.beta, tau_p, L, U, cfg.noise_power_w);
                const chan::CVec est =
                    denoise_all(*model, h_ls, h_sens_est, real.geometry.ues, L, U, M, starts);
                methods[slot++].linear.push_back(est::nmse(est, real.h_comm, M).linear);
            }
        }
    }

    std::vector<ResultRow> rows;
    for (const auto& m : methods) {
        ResultRow row;
        row.grid_value = grid_value;
        row.method = m.method;
        summarize(m.linear, row.nmse_db, row.nmse_std_db);
        row.trials = spec.trials;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void ExperimentSpec::validate() const {
    if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
    if (trials < 1) throw ConfigError("sweep trials must be >= 1");
    for (double value : grid) apply_variable(scenario, variable, value).validate();
}

void check_compatible(const ddm::ModelConfig& model, const chan::ScenarioConfig& scenario) {
    if (model.num_aps != scenario.num_aps || model.num_receive_aps != scenario.num_receive_aps ||
        model.antennas != scenario.antennas) {
        throw ConfigError(
            "checkpoint/scenario dimension mismatch: model has L=" +
            std::to_string(model.num_aps) + ", L_r=" + std::to_string(model.num_receive_aps) +
            ", M=" + std::to_string(model.antennas) + "; scenario has L=" +
            std::to_string(scenario.num_aps) + ", L_r=" + std::to_string(scenario.num_receive_aps) +
            ", M=" + std::to_string(scenario.antennas));
    }
}

chan::CVec denoise_all(ddm::DiffusionModel& model, const chan::CVec& h_ls,
                       const chan::CVec& h_sens_est, const std::vector<chan::Point>& ue_locations,
                       int num_aps, int num_ues, int antennas, std::optional<int> start_step) {
    const std::vector<int> starts(
        static_cast<std::size_t>(num_ues),
        start_step.value_or(model.config().diffusion_steps));
    return denoise_all(model, h_ls, h_sens_est, ue_locations, num_aps, num_ues, antennas, starts);
}

chan::CVec denoise_all(ddm::DiffusionModel& model, const chan::CVec& h_ls,
                       const chan::CVec& h_sens_est, const std::vector<chan::Point>& ue_locations,
                       int num_aps, int num_ues, int antennas,
                       const std::vector<int>& per_ue_starts) {
    const std::size_t L = num_aps, U = num_ues, M = antennas;
    if (h_ls.size() != L * U * M)
        throw DimensionError("denoise_all: h_ls has " + std::to_string(h_ls.size()) +
                             " entries, expected " + std::to_string(L * U * M));
    if (ue_locations.size() != U)
        throw DimensionError("denoise_all: " + std::to_string(ue_locations.size()) +
                             " UE locations for " + std::to_string(U) + " UEs");
    if (per_ue_starts.size() != U)
        throw DimensionError("denoise_all: " + std::to_string(per_ue_starts.size()) +
                             " start steps for " + std::to_string(U) + " UEs");

    chan::CVec out(L * U * M);
    chan::CVec link(L * M);
    for (std::size_t u = 0; u < U; ++u) {
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t m = 0; m < M; ++m) link[l * M + m] = h_ls[(l * U + u) * M + m];
        const ddm::Conditioning cond{&h_sens_est, ue_locations[u]};
        const chan::CVec denoised = model.denoise(link, &cond, per_ue_starts[u]);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t m = 0; m < M; ++m) out[(l * U + u) * M + m] = denoised[l * M + m];
    }
    return out;
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<std::future<std::vector<ResultRow>>> futures;
    futures.reserve(spec.grid.size());
    for (double value : spec.grid)
        futures.push_back(std::async(std::launch::async,
                                     [&spec, value] { return evaluate_point(spec, value); }));
    std::vector<ResultRow> rows;
    for (auto& f : futures) {
        auto point_rows = f.get();
        rows.insert(rows.end(), point_rows.begin(), point_rows.end());
    }
    return rows;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "grid,method,nmse_db,nmse_std_db,trials\n";
    for (const auto& r : rows) {
        out += io::Config::format_real(r.grid_value);
        out += ',';
        out += r.method;
        out += ',';
        out += io::Config::format_real(r.nmse_db);
        out += ',';
        out += io::Config::format_real(r.nmse_std_db);
        out += ',';
        out += std::to_string(r.trials);
        out += '\n';
    }
    return out;
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    write_text_file(to_csv(rows), path);
}

std::vector<MethodSummary> evaluate_samples(const data::Dataset& dataset,
                                            const std::vector<std::uint64_t>& ids,
                                            ddm::DiffusionModel* cddm, ddm::DiffusionModel* tddm,
                                            std::optional<int> start_step) {
    if (ids.empty()) throw InputError("evaluate_samples: no sample ids given");

    std::vector<MethodAccum> methods;
    methods.push_back({"ls", {}});
    methods.push_back({"mmse", {}});
    if (tddm) methods.push_back({"tddm", {}});
    if (cddm) methods.push_back({"cddm", {}});

    for (std::uint64_t id : ids) {
        if (id >= dataset.samples.size())
            throw InputError("evaluate_samples: sample id " + std::to_string(id) +
                             " outside dataset of " + std::to_string(dataset.samples.size()));
        const data::Sample& s = dataset.samples[id];
        const chan::ScenarioConfig& cfg = s.scenario;
        const int L = cfg.num_aps, M = cfg.antennas, U = cfg.num_ues;
        if (tddm) check_compatible(tddm->config(), cfg);
        if (cddm) check_compatible(cddm->config(), cfg);

        std::size_t slot = 0;
        methods[slot++].linear.push_back(est::nmse(s.h_ls, s.h_comm, M).linear);

        chan::PilotObservation obs;
        obs.y = s.y_pilot;
        const chan::CVec h_mmse =
            est::mmse_estimate(obs, s.pilot_assignment, s.powers, s.beta, cfg.pilot_length, L, M,
                               cfg.noise_power_w);
        methods[slot++].linear.push_back(est::nmse(h_mmse, s.h_comm, M).linear);

        for (auto* model : {tddm, cddm}) {
            if (!model) continue;
            const std::vector<int> starts =
                start_step ? std::vector<int>(static_cast<std::size_t>(U), *start_step)
                           : noise_matched_starts(*model, s.pilot_assignment, s.powers, s.beta,
                                                  cfg.pilot_length, L, U, cfg.noise_power_w);
            const chan::CVec est =
                denoise_all(*model, s.h_ls, s.h_sens_est, s.ue_locations, L, U, M, starts);
            methods[slot++].linear.push_back(est::nmse(est, s.h_comm, M).linear);
        }
    }

    std::vector<MethodSummary> rows;
    for (const auto& m : methods) {
        MethodSummary row;
        row.method = m.method;
        summarize(m.linear, row.nmse_db, row.nmse_std_db);
        row.count = static_cast<int>(ids.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_csv(const std::vector<MethodSummary>& rows) {
    std::string out = "method,nmse_db,nmse_std_db,count\n";
    for (const auto& r : rows) {
        out += r.method;
        out += ',';
        out += io::Config::format_real(r.nmse_db);
        out += ',';
        out += io::Config::format_real(r.nmse_std_db);
        out += ',';
        out += std::to_string(r.count);
        out += '\n';
    }
    return out;
}

void write_csv(const std::vector<MethodSummary>& rows, const std::string& path) {
    write_text_file(to_csv(rows), path);
}

}  // namespace cfdiff::bench
