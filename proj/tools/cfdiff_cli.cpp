// Command-line harness: dataset generation, diffusion training, dataset
// evaluation, and NMSE benchmark sweeps, all driven by a flat text config.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfdiff/bench/sweep.hpp"
#include "cfdiff/data/dataset.hpp"
#include "cfdiff/ddm/diffusion.hpp"
#include "cfdiff/error.hpp"
#include "cfdiff/io/config.hpp"
#include "cfdiff/io/hash.hpp"

namespace fs = std::filesystem;
using namespace cfdiff;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct RunContext {
    std::string command;
    std::string config_path;
    std::string out_dir = ".";
    std::string checkpoint_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> start_step_flag;
    bool baseline_only = false;

    io::Config config;
    std::uint64_t effective_seed = 0;
    std::map<std::string, std::uint64_t> input_hashes;
    std::vector<std::string> outputs;

    std::string out_path(const std::string& name) const {
        return (fs::path(out_dir) / name).string();
    }

    void track_input(const std::string& path) {
        input_hashes[path] = io::fnv1a64_file(path);
    }

    // read-only contract on datasets and checkpoints
    void verify_inputs_unchanged() const {
        for (const auto& [path, before] : input_hashes)
            if (io::fnv1a64_file(path) != before)
                throw IoError("input file changed during the run: '" + path + "'");
    }

    void write_metadata() const {
        nlohmann::json meta;
        meta["command"] = command;
        meta["config_path"] = config_path;
        meta["config_hash"] = io::hex64(io::fnv1a64_file(config_path));
        meta["seed"] = effective_seed;
        meta["versions"] = {{"tool", kToolVersion}, {"dataset_format", 1},
                            {"checkpoint_format", 1}};
        nlohmann::json inputs = nlohmann::json::object();
        for (const auto& [path, hash] : input_hashes) inputs[path] = io::hex64(hash);
        meta["inputs"] = inputs;
        meta["outputs"] = outputs;
        const std::string path = out_path("run-metadata-" + command + ".json");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        out << meta.dump(2) << '\n';
        if (!out) throw IoError("write failed for '" + path + "'");
    }
};

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

void run_generate(RunContext& ctx) {
    const auto base = io::scenario_from_config(ctx.config);
    const auto ranges = io::ranges_from_config(ctx.config);
    const std::uint64_t n = ctx.config.get_u64("dataset.num_samples", 1000);
    ctx.effective_seed =
        ctx.seed_flag ? *ctx.seed_flag : ctx.config.get_u64("dataset.seed", 1);

    const auto dataset = data::generate_dataset(base, ranges, n, ctx.effective_seed);
    data::save_dataset(dataset, ctx.out_dir);
    ctx.outputs = {ctx.out_path("dataset.manifest"), ctx.out_path("dataset.bin")};

    const auto& m = dataset.manifest;
    std::cout << "generated " << m.num_samples << " samples (train/val/test = " << m.train_count
              << "/" << m.val_count << "/" << m.test_count << ") into " << ctx.out_dir << "\n"
              << "normalization_scale = " << io::Config::format_real(m.normalization_scale)
              << ", sensing_scale = " << io::Config::format_real(m.sensing_scale) << "\n";
}

// model hyperparameters come from model.*; dims and scales from the dataset
ddm::ModelConfig model_config_for(const io::Config& c, const data::Dataset& dataset,
                                  std::uint64_t seed) {
    const chan::ScenarioConfig& sc = dataset.samples.front().scenario;
    ddm::ModelConfig mc;
    mc.diffusion_steps = static_cast<int>(c.get_int("model.diffusion_steps", mc.diffusion_steps));
    mc.conditioned = c.get_int("model.conditioned", 1) != 0;
    mc.num_aps = sc.num_aps;
    mc.num_receive_aps = sc.num_receive_aps;
    mc.antennas = sc.antennas;
    mc.token_dim = static_cast<int>(c.get_int("model.token_dim", mc.token_dim));
    mc.location_hidden = static_cast<int>(c.get_int("model.location_hidden", mc.location_hidden));
    mc.attention_heads =
        static_cast<int>(c.get_int("model.attention_heads", mc.attention_heads));
    mc.fused_dim = static_cast<int>(c.get_int("model.fused_dim", mc.fused_dim));
    mc.mlp_hidden = static_cast<int>(c.get_int("model.mlp_hidden", mc.mlp_hidden));
    mc.normalization_scale = dataset.manifest.normalization_scale;
    mc.sensing_scale = dataset.manifest.sensing_scale;
    mc.area_scale_m = c.get_real("model.area_scale_m",
                                 std::max(sc.area_width_m, sc.area_height_m));
    mc.reference_ap = {0.0, sc.area_height_m / 2.0};  // tx AP position
    mc.init_seed = c.get_u64("model.init_seed", seed);
    mc.validate();
    return mc;
}

std::string training_log_csv(const std::vector<ddm::EpochLog>& logs) {
    std::string csv = "epoch,train_loss,val_loss,lr\n";
    for (const auto& log : logs) {
        csv += std::to_string(log.epoch);
        csv += ',';
        csv += io::Config::format_real(log.train_loss);
        csv += ',';
        csv += io::Config::format_real(log.val_loss);
        csv += ',';
        csv += io::Config::format_real(log.learning_rate);
        csv += '\n';
    }
    return csv;
}

void run_train(RunContext& ctx) {
    const std::string ds_dir = ctx.config.get_string("train.dataset_dir");
    ctx.track_input((fs::path(ds_dir) / "dataset.manifest").string());
    ctx.track_input((fs::path(ds_dir) / "dataset.bin").string());
    const auto dataset = data::load_dataset(ds_dir);

    ctx.effective_seed = ctx.seed_flag ? *ctx.seed_flag : ctx.config.get_u64("train.seed", 1);
    const auto mc = model_config_for(ctx.config, dataset, ctx.effective_seed);
    ddm::DiffusionModel model(mc);

    ddm::TrainSettings ts;
    ts.batch_size = static_cast<int>(ctx.config.get_int("train.batch_size", ts.batch_size));
    ts.max_epochs = static_cast<int>(ctx.config.get_int("train.max_epochs", ts.max_epochs));
    ts.learning_rate = ctx.config.get_real("train.learning_rate", ts.learning_rate);
    ts.decay_factor = ctx.config.get_real("train.decay_factor", ts.decay_factor);
    ts.patience = static_cast<int>(ctx.config.get_int("train.patience", ts.patience));
    ts.min_learning_rate =
        ctx.config.get_real("train.min_learning_rate", ts.min_learning_rate);
    ts.rho = ctx.config.get_real("train.rho", ts.rho);
    ts.rmsprop_eps = ctx.config.get_real("train.rmsprop_eps", ts.rmsprop_eps);
    ts.seed = ctx.effective_seed;

    const auto train_items = ddm::make_train_items(dataset, dataset.train_ids(), mc);
    const auto val_items = ddm::make_train_items(dataset, dataset.val_ids(), mc);
    std::cout << (mc.conditioned ? "conditioned" : "unconditioned") << " model, "
              << train_items.size() << " train / " << val_items.size() << " val items\n";

    nn::OptimizerState state;
    const auto logs = ddm::train(model, train_items, val_items, ts, state);
    for (const auto& log : logs)
        std::cout << "epoch " << log.epoch << "  train " << log.train_loss << "  val "
                  << log.val_loss << "  lr " << log.learning_rate << "\n";

    const std::string log_path = ctx.out_path("training_log.csv");
    write_text(training_log_csv(logs), log_path);

    io::Config extra;
    extra.set("run.command", "train");
    extra.set_u64("run.seed", ctx.effective_seed);
    extra.set("run.dataset_dir", ds_dir);
    extra.set_int("run.epochs_trained", static_cast<long long>(logs.size()));
    const std::string ckpt_path =
        ctx.out_path(ctx.config.get_string("train.checkpoint_name", "model.ckpt"));
    ddm::save_model(model, state, extra.to_string(), ckpt_path);
    ctx.outputs = {ckpt_path, log_path};
    std::cout << "saved checkpoint to " << ckpt_path << "\n";
}

std::vector<std::uint64_t> split_ids(const data::Dataset& dataset, const std::string& split) {
    if (split == "train") return dataset.train_ids();
    if (split == "val") return dataset.val_ids();
    if (split == "test") return dataset.test_ids();
    throw ConfigError("unknown split '" + split + "' (expected train, val, or test)");
}

std::optional<int> start_step_for(const RunContext& ctx, const std::string& key) {
    if (ctx.start_step_flag) return ctx.start_step_flag;
    if (ctx.config.has(key)) return static_cast<int>(ctx.config.get_int(key));
    return std::nullopt;
}

void run_eval(RunContext& ctx) {
    const std::string ds_dir = ctx.config.get_string("eval.dataset_dir");
    ctx.track_input((fs::path(ds_dir) / "dataset.manifest").string());
    ctx.track_input((fs::path(ds_dir) / "dataset.bin").string());
    const auto dataset = data::load_dataset(ds_dir);
    ctx.effective_seed = dataset.manifest.root_seed;
    const auto ids = split_ids(dataset, ctx.config.get_string("eval.split", "test"));

    std::string cddm_path = !ctx.checkpoint_flag.empty()
                                ? ctx.checkpoint_flag
                                : ctx.config.get_string("eval.cddm_checkpoint", "");
    std::string tddm_path = ctx.config.get_string("eval.tddm_checkpoint", "");
    if (ctx.baseline_only) {
        cddm_path.clear();
        tddm_path.clear();
    }

    std::unique_ptr<ddm::DiffusionModel> cddm, tddm;
    if (!cddm_path.empty()) {
        ctx.track_input(cddm_path);
        cddm = ddm::load_model(cddm_path).model;
        bench::check_compatible(cddm->config(), dataset.samples.front().scenario);
    }
    if (!tddm_path.empty()) {
        ctx.track_input(tddm_path);
        tddm = ddm::load_model(tddm_path).model;
        bench::check_compatible(tddm->config(), dataset.samples.front().scenario);
    }

    const auto rows = bench::evaluate_samples(dataset, ids, cddm.get(), tddm.get(),
                                              start_step_for(ctx, "eval.start_step"));
    const std::string csv_path = ctx.out_path("eval.csv");
    bench::write_csv(rows, csv_path);
    ctx.outputs = {csv_path};
    std::cout << bench::to_csv(rows);
}

void run_sweep_cmd(RunContext& ctx) {
    bench::ExperimentSpec spec;
    spec.variable = bench::sweep_variable_from_string(ctx.config.get_string("sweep.variable"));
    spec.grid = ctx.config.get_real_list("sweep.grid");
    spec.scenario = io::scenario_from_config(ctx.config);
    spec.trials = static_cast<int>(ctx.config.get_int("sweep.trials", spec.trials));
    ctx.effective_seed = ctx.seed_flag ? *ctx.seed_flag : ctx.config.get_u64("sweep.seed", 1);
    spec.seed = ctx.effective_seed;
    spec.cddm_checkpoint = !ctx.checkpoint_flag.empty()
                               ? ctx.checkpoint_flag
                               : ctx.config.get_string("sweep.cddm_checkpoint", "");
    spec.tddm_checkpoint = ctx.config.get_string("sweep.tddm_checkpoint", "");
    if (ctx.baseline_only) {
        spec.cddm_checkpoint.clear();
        spec.tddm_checkpoint.clear();
    }
    spec.start_step = start_step_for(ctx, "sweep.start_step");

    if (!spec.cddm_checkpoint.empty()) ctx.track_input(spec.cddm_checkpoint);
    if (!spec.tddm_checkpoint.empty()) ctx.track_input(spec.tddm_checkpoint);

    const auto rows = bench::run_sweep(spec);
    const std::string csv_path = ctx.out_path("sweep.csv");
    bench::write_csv(rows, csv_path);
    ctx.outputs = {csv_path};
    std::cout << bench::to_csv(rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cell-free uplink channel estimation: datasets, diffusion denoisers, and "
                 "NMSE benchmarks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    RunContext ctx;
    std::uint64_t seed_value = 0;
    int start_step_value = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", ctx.config_path, "config file (key = value text)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_value, "override the config seed");
        sub->add_option("--out", ctx.out_dir, "output directory (default .)");
    };
    const auto add_eval_flags = [&](CLI::App* sub) {
        sub->add_option("--checkpoint", ctx.checkpoint_flag,
                        "conditioned-model checkpoint (overrides the config path)");
        sub->add_flag("--baseline-only", ctx.baseline_only, "evaluate only LS and MMSE");
        sub->add_option("--start-step", start_step_value,
                        "reverse-process start step (default: per-UE, matched to the LS error)");
    };

    CLI::App* sub_generate =
        app.add_subcommand("generate", "draw a dataset and store it under --out");
    add_common(sub_generate);
    CLI::App* sub_train =
        app.add_subcommand("train", "train a denoiser on a stored dataset");
    add_common(sub_train);
    CLI::App* sub_eval =
        app.add_subcommand("eval", "NMSE per method on a stored dataset split");
    add_common(sub_eval);
    add_eval_flags(sub_eval);
    CLI::App* sub_sweep =
        app.add_subcommand("sweep", "NMSE vs a swept scenario knob, fresh trials per point");
    add_common(sub_sweep);
    add_eval_flags(sub_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        ctx.command = sub->get_name();
        if (sub->count("--seed")) ctx.seed_flag = seed_value;
        if ((sub == sub_eval || sub == sub_sweep) && sub->count("--start-step"))
            ctx.start_step_flag = start_step_value;

        ctx.config = io::Config::parse_file(ctx.config_path);
        fs::create_directories(ctx.out_dir);

        if (sub == sub_generate)
            run_generate(ctx);
        else if (sub == sub_train)
            run_train(ctx);
        else if (sub == sub_eval)
            run_eval(ctx);
        else
            run_sweep_cmd(ctx);

        ctx.verify_inputs_unchanged();
        ctx.write_metadata();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
