#include "cfdiff/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cfdiff/error.hpp"
#include "cfdiff/est/estimators.hpp"
#include "cfdiff/io/binio.hpp"
#include "cfdiff/io/config.hpp"

namespace cfdiff::data {

namespace {

bool all_finite(const chan::CVec& v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void Sample::validate() const {
    const auto L = static_cast<std::size_t>(scenario.num_aps);
    const auto Lr = static_cast<std::size_t>(scenario.num_receive_aps);
    const auto M = static_cast<std::size_t>(scenario.antennas);
    const auto U = static_cast<std::size_t>(scenario.num_ues);
    const auto tau = static_cast<std::size_t>(scenario.pilot_length);
    if (h_comm.size() != L * U * M) throw DimensionError("sample: h_comm shape mismatch");
    if (y_pilot.size() != L * tau * M) throw DimensionError("sample: y_pilot shape mismatch");
    if (h_ls.size() != L * U * M) throw DimensionError("sample: h_ls shape mismatch");
    if (h_sens_est.size() != Lr * M * M) throw DimensionError("sample: h_sens_est shape mismatch");
    if (beta.size() != L * U) throw DimensionError("sample: beta shape mismatch");
    if (ue_locations.size() != U) throw DimensionError("sample: ue_locations shape mismatch");
    if (pilot_assignment.size() != U)
        throw DimensionError("sample: pilot_assignment shape mismatch");
    if (powers.size() != U) throw DimensionError("sample: powers shape mismatch");
    if (!all_finite(h_comm) || !all_finite(y_pilot) || !all_finite(h_ls) ||
        !all_finite(h_sens_est) || !all_finite(beta) || !all_finite(powers))
        throw NumericError("sample " + std::to_string(sample_id) + ": non-finite entries");
}

std::vector<std::uint64_t> Dataset::train_ids() const {
    return {split_order.begin(), split_order.begin() + static_cast<long>(manifest.train_count)};
}

std::vector<std::uint64_t> Dataset::val_ids() const {
    auto b = split_order.begin() + static_cast<long>(manifest.train_count);
    return {b, b + static_cast<long>(manifest.val_count)};
}

std::vector<std::uint64_t> Dataset::test_ids() const {
    auto b = split_order.begin() +
             static_cast<long>(manifest.train_count + manifest.val_count);
    return {b, split_order.end()};
}

namespace {

Sample draw_sample(const chan::ScenarioConfig& base, const chan::SampleRanges& ranges,
                   std::uint64_t id, Rng& root) {
    Rng rng = root.derive(Stream::kSample, id);

    chan::ScenarioConfig cfg = base;
    cfg.num_ues = rng.uniform_int(ranges.num_ues_lo, ranges.num_ues_hi);
    cfg.pilot_length =
        ranges.pilot_lengths[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(ranges.pilot_lengths.size()) - 1))];
    cfg.max_target_distance_m =
        rng.uniform(ranges.max_target_distance_lo_m, ranges.max_target_distance_hi_m);
    cfg.target_snr_db = rng.uniform(ranges.target_snr_lo_db, ranges.target_snr_hi_db);
    cfg.seed = rng.seed();
    cfg.validate();

    const int L = cfg.num_aps, Lr = cfg.num_receive_aps, M = cfg.antennas;
    const int N = cfg.radar_snapshots, tau = cfg.pilot_length;

    chan::ChannelRealization real = chan::generate_realization(cfg, rng);
    chan::PilotObservation obs = chan::received_pilots(real, tau, cfg.noise_power_w, rng);
    const chan::CVec probe = chan::radar_probe(M, N);
    const chan::CVec radar =
        chan::received_radar(real, probe, M, N, cfg.radar_noise_power_w, rng);

    Sample s;
    s.sample_id = id;
    s.scenario = cfg;
    s.h_comm = std::move(real.h_comm);
    s.y_pilot = obs.y;
    s.h_ls = est::ls_estimate(obs, real.pilot_assignment, real.powers, tau, L, M);
    s.h_sens_est.resize(static_cast<std::size_t>(Lr) * M * M);
    for (int r = 0; r < Lr; ++r) {
        const chan::CVec y_r(radar.begin() + static_cast<long>(r) * M * N,
                             radar.begin() + static_cast<long>(r + 1) * M * N);
        const chan::CVec h_r = est::sensing_ls(y_r, probe, M, N);
        std::copy(h_r.begin(), h_r.end(),
                  s.h_sens_est.begin() + static_cast<long>(r) * M * M);
    }
    s.beta = std::move(real.beta);
    s.ue_locations = real.geometry.ues;
    s.target_location = real.geometry.target;
    s.pilot_assignment = std::move(real.pilot_assignment);
    s.powers = std::move(real.powers);
    s.validate();
    return s;
}

double component_rms(const Dataset& dataset, const std::vector<std::uint64_t>& ids,
                     const chan::CVec Sample::*field, const char* what) {
    if (ids.empty()) throw InputError(std::string(what) + ": empty sample-id set");
    double sum_sq = 0.0;
    std::uint64_t count = 0;
    for (std::uint64_t id : ids) {
        if (id >= dataset.samples.size())
            throw InputError(std::string(what) + ": sample id out of range");
        for (const auto& z : dataset.samples[id].*field) {
            sum_sq += z.real() * z.real() + z.imag() * z.imag();
            count += 2;
        }
    }
    if (count == 0) throw NumericError(std::string(what) + ": no entries");
    const double rms = std::sqrt(sum_sq / static_cast<double>(count));
    if (!std::isfinite(rms) || rms <= 0.0)
        throw NumericError(std::string(what) + ": degenerate scale (all-zero or non-finite data)");
    return rms;
}

}  // namespace

double normalization_scale(const Dataset& dataset, const std::vector<std::uint64_t>& ids) {
    return component_rms(dataset, ids, &Sample::h_comm, "normalization_scale");
}

double sensing_scale(const Dataset& dataset, const std::vector<std::uint64_t>& ids) {
    return component_rms(dataset, ids, &Sample::h_sens_est, "sensing_scale");
}

Dataset generate_dataset(const chan::ScenarioConfig& base, const chan::SampleRanges& ranges,
                         std::uint64_t n_samples, std::uint64_t root_seed) {
    if (n_samples < 10) throw InputError("generate_dataset: n_samples must be >= 10");
    base.validate();
    ranges.validate();

    Dataset ds;
    Rng root(root_seed);
    ds.samples.reserve(n_samples);
    for (std::uint64_t id = 0; id < n_samples; ++id)
        ds.samples.push_back(draw_sample(base, ranges, id, root));

    // seeded Fisher-Yates shuffle, then contiguous 60/20/20 blocks
    ds.split_order.resize(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) ds.split_order[i] = i;
    Rng split_rng = root.derive(Stream::kSplit, 0);
    for (std::uint64_t i = 0; i + 1 < n_samples; ++i) {
        const auto j = static_cast<std::uint64_t>(
            split_rng.uniform_int(static_cast<int>(i), static_cast<int>(n_samples - 1)));
        std::swap(ds.split_order[i], ds.split_order[j]);
    }

    auto& m = ds.manifest;
    m.format_version = 1;
    m.root_seed = root_seed;
    m.num_samples = n_samples;
    m.train_count = n_samples * 6 / 10;
    m.val_count = n_samples * 2 / 10;
    m.test_count = n_samples - m.train_count - m.val_count;
    m.normalization_scale = normalization_scale(ds, ds.train_ids());
    m.sensing_scale = sensing_scale(ds, ds.train_ids());
    return ds;
}

namespace {

constexpr char kMagic[8] = {'C', 'F', 'D', 'M', 'D', 'A', 'T', 'A'};

void write_scenario(std::ostream& os, const chan::ScenarioConfig& s) {
    io::write_f64(os, s.area_width_m);
    io::write_f64(os, s.area_height_m);
    io::write_u32(os, static_cast<std::uint32_t>(s.num_aps));
    io::write_u32(os, static_cast<std::uint32_t>(s.num_receive_aps));
    io::write_u32(os, static_cast<std::uint32_t>(s.antennas));
    io::write_u32(os, static_cast<std::uint32_t>(s.num_ues));
    io::write_u32(os, static_cast<std::uint32_t>(s.pilot_length));
    io::write_f64(os, s.max_target_distance_m);
    io::write_f64(os, s.carrier_freq_ghz);
    io::write_f64(os, s.rician_k);
    io::write_f64(os, s.target_snr_db);
    io::write_f64(os, s.max_power_w);
    io::write_f64(os, s.noise_power_w);
    io::write_f64(os, s.radar_noise_power_w);
    io::write_f64(os, s.rcs_variance_m2);
    io::write_f64(os, s.shadow_std_db);
    io::write_u32(os, static_cast<std::uint32_t>(s.radar_snapshots));
    io::write_u64(os, s.seed);
}

chan::ScenarioConfig read_scenario(std::istream& is) {
    chan::ScenarioConfig s;
    s.area_width_m = io::read_f64(is);
    s.area_height_m = io::read_f64(is);
    s.num_aps = static_cast<int>(io::read_u32(is));
    s.num_receive_aps = static_cast<int>(io::read_u32(is));
    s.antennas = static_cast<int>(io::read_u32(is));
    s.num_ues = static_cast<int>(io::read_u32(is));
    s.pilot_length = static_cast<int>(io::read_u32(is));
    s.max_target_distance_m = io::read_f64(is);
    s.carrier_freq_ghz = io::read_f64(is);
    s.rician_k = io::read_f64(is);
    s.target_snr_db = io::read_f64(is);
    s.max_power_w = io::read_f64(is);
    s.noise_power_w = io::read_f64(is);
    s.radar_noise_power_w = io::read_f64(is);
    s.rcs_variance_m2 = io::read_f64(is);
    s.shadow_std_db = io::read_f64(is);
    s.radar_snapshots = static_cast<int>(io::read_u32(is));
    s.seed = io::read_u64(is);
    return s;
}

void write_sample(std::ostream& os, const Sample& s) {
    const auto L = static_cast<std::uint64_t>(s.scenario.num_aps);
    const auto Lr = static_cast<std::uint64_t>(s.scenario.num_receive_aps);
    const auto M = static_cast<std::uint64_t>(s.scenario.antennas);
    const auto U = static_cast<std::uint64_t>(s.scenario.num_ues);
    const auto tau = static_cast<std::uint64_t>(s.scenario.pilot_length);

    io::write_u64(os, s.sample_id);
    write_scenario(os, s.scenario);
    io::write_complex_array(os, {L, U, M}, s.h_comm);
    io::write_complex_array(os, {L, tau, M}, s.y_pilot);
    io::write_complex_array(os, {L, U, M}, s.h_ls);
    io::write_complex_array(os, {Lr, M, M}, s.h_sens_est);
    io::write_real_array(os, {L, U}, s.beta);

    std::vector<double> ue_xy(2 * s.ue_locations.size());
    for (std::size_t u = 0; u < s.ue_locations.size(); ++u) {
        ue_xy[2 * u] = s.ue_locations[u].first;
        ue_xy[2 * u + 1] = s.ue_locations[u].second;
    }
    io::write_real_array(os, {U, 2}, ue_xy);
    io::write_real_array(os, {2}, {s.target_location.first, s.target_location.second});

    io::write_shape(os, {U});
    for (int p : s.pilot_assignment) io::write_u64(os, static_cast<std::uint64_t>(p));
    io::write_real_array(os, {U}, s.powers);
}

Sample read_sample(std::istream& is) {
    Sample s;
    s.sample_id = io::read_u64(is);
    s.scenario = read_scenario(is);

    std::vector<std::uint64_t> dims;
    s.h_comm = io::read_complex_array(is, dims);
    s.y_pilot = io::read_complex_array(is, dims);
    s.h_ls = io::read_complex_array(is, dims);
    s.h_sens_est = io::read_complex_array(is, dims);
    s.beta = io::read_real_array(is, dims);

    const std::vector<double> ue_xy = io::read_real_array(is, dims);
    if (dims.size() != 2 || dims[1] != 2) throw IoError("dataset: malformed ue_locations array");
    s.ue_locations.resize(dims[0]);
    for (std::size_t u = 0; u < s.ue_locations.size(); ++u)
        s.ue_locations[u] = {ue_xy[2 * u], ue_xy[2 * u + 1]};

    const std::vector<double> target = io::read_real_array(is, dims);
    if (target.size() != 2) throw IoError("dataset: malformed target_location array");
    s.target_location = {target[0], target[1]};

    dims = io::read_shape(is);
    if (dims.size() != 1) throw IoError("dataset: malformed pilot_assignment array");
    s.pilot_assignment.resize(dims[0]);
    for (auto& p : s.pilot_assignment) p = static_cast<int>(io::read_u64(is));

    s.powers = io::read_real_array(is, dims);
    s.validate();
    return s;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    const std::string manifest_path = (fs::path(dir) / "dataset.manifest").string();
    const std::string bin_path = (fs::path(dir) / "dataset.bin").string();

    io::Config m;
    m.set_u64("dataset.format_version", dataset.manifest.format_version);
    m.set_u64("dataset.root_seed", dataset.manifest.root_seed);
    m.set_u64("dataset.num_samples", dataset.manifest.num_samples);
    m.set_u64("dataset.train_count", dataset.manifest.train_count);
    m.set_u64("dataset.val_count", dataset.manifest.val_count);
    m.set_u64("dataset.test_count", dataset.manifest.test_count);
    m.set_real("dataset.normalization_scale", dataset.manifest.normalization_scale);
    m.set_real("dataset.sensing_scale", dataset.manifest.sensing_scale);
    try {
        m.save_file(manifest_path);
    } catch (const IoError&) {
        throw IoError("cannot write dataset manifest '" + manifest_path + "'");
    }

    std::ofstream os(bin_path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write dataset store '" + bin_path + "'");
    os.write(kMagic, sizeof kMagic);
    io::write_u32(os, dataset.manifest.format_version);
    io::write_u64(os, dataset.manifest.num_samples);
    for (auto id : dataset.split_order) io::write_u64(os, id);
    for (const auto& s : dataset.samples) write_sample(os, s);
    if (!os) throw IoError("failed writing dataset store '" + bin_path + "'");
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string manifest_path = (fs::path(dir) / "dataset.manifest").string();
    const std::string bin_path = (fs::path(dir) / "dataset.bin").string();

    const io::Config m = io::Config::parse_file(manifest_path);
    Dataset ds;
    ds.manifest.format_version = static_cast<std::uint32_t>(m.get_u64("dataset.format_version"));
    if (ds.manifest.format_version != 1)
        throw IoError("dataset '" + manifest_path + "': unsupported format version " +
                      std::to_string(ds.manifest.format_version));
    ds.manifest.root_seed = m.get_u64("dataset.root_seed");
    ds.manifest.num_samples = m.get_u64("dataset.num_samples");
    ds.manifest.train_count = m.get_u64("dataset.train_count");
    ds.manifest.val_count = m.get_u64("dataset.val_count");
    ds.manifest.test_count = m.get_u64("dataset.test_count");
    ds.manifest.normalization_scale = m.get_real("dataset.normalization_scale");
    ds.manifest.sensing_scale = m.get_real("dataset.sensing_scale");
    if (ds.manifest.train_count + ds.manifest.val_count + ds.manifest.test_count !=
        ds.manifest.num_samples)
        throw IoError("dataset '" + manifest_path + "': split counts do not sum to num_samples");

    std::ifstream is(bin_path, std::ios::binary);
    if (!is) throw IoError("cannot open dataset store '" + bin_path + "'");
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || !std::equal(magic, magic + 8, kMagic))
        throw IoError("dataset '" + bin_path + "': bad magic");
    const std::uint32_t version = io::read_u32(is);
    if (version != ds.manifest.format_version)
        throw IoError("dataset '" + bin_path + "': manifest/store version mismatch");
    const std::uint64_t n = io::read_u64(is);
    if (n != ds.manifest.num_samples)
        throw IoError("dataset '" + bin_path + "': manifest/store sample count mismatch");

    ds.split_order.resize(n);
    for (auto& id : ds.split_order) {
        id = io::read_u64(is);
        if (id >= n) throw IoError("dataset '" + bin_path + "': split id out of range");
    }
    ds.samples.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample s = read_sample(is);
        if (s.sample_id != i)
            throw IoError("dataset '" + bin_path + "': samples out of order");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace cfdiff::data
