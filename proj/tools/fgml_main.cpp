// fgml: train and evaluate margin-based embedding models from the command
// line. Subcommands: train, eval, ablate, gradcheck, synth, features.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fgml/config.hpp"
#include "fgml/error.hpp"
#include "fgml/gradcheck_suite.hpp"
#include "fgml/train.hpp"

namespace fs = std::filesystem;
using namespace fgml;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 data/format, 3 numeric failure.
int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Parameter:
            return 1;
        case ErrorKind::Dimension:
        case ErrorKind::Label:
        case ErrorKind::Format:
        case ErrorKind::Data:
        case ErrorKind::Version:
        case ErrorKind::Io:
            return 2;
        case ErrorKind::Numeric:
        case ErrorKind::Degenerate:
            return 3;
    }
    return 1;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string loss_mode;
};

EngineConfig resolve_config(const CommonOpts& opts) {
    EngineConfig config;
    if (!opts.config_path.empty()) config = parse_config_file(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
        apply_config_key(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed_set) {
        config.train.seed = opts.seed;
        config.synth.seed = opts.seed;
    }
    if (!opts.loss_mode.empty()) config.train.loss_mode = parse_loss_mode(opts.loss_mode);
    return config;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) raise(ErrorKind::Io, "write failed for " + path.string());
}

void print_epoch(const EpochRecord& r) {
    std::printf("epoch %3zu  loss %.6f", r.epoch, r.loss_total);
    if (r.val_accuracy >= 0.0) std::printf("  val_acc %.4f", r.val_accuracy);
    std::printf("  (%.2fs)\n", r.wall_seconds);
    std::fflush(stdout);
}

int cmd_train(const CommonOpts& opts) {
    EngineConfig config = resolve_config(opts);
    const DatasetSplits data = load_dataset(config);
    const fs::path out = opts.out_dir.empty() ? fs::path("out") : fs::path(opts.out_dir);
    fs::create_directories(out);

    std::printf("training loss_mode=%s seed=%llu train=%zu val=%zu test=%zu\n",
                loss_mode_name(config.train.loss_mode),
                static_cast<unsigned long long>(config.train.seed),
                data.train.samples.size(), data.validation.samples.size(),
                data.test.samples.size());

    TrainResult result = train(config.train, data, nullptr, print_epoch);

    save_checkpoint((out / "checkpoint.mck").string(), result.best);
    save_checkpoint((out / "last.mck").string(), result.final_state);
    write_text(out / "trainlog.txt", train_log_lines(result.log));

    std::printf("best val_acc %.4f at epoch %zu\n", result.best.best_val_accuracy,
                result.best.best_epoch);

    if (!data.test.samples.empty()) {
        auto [cm, report] = evaluate(result.best, data.test);
        write_text(out / "metrics.txt", format_metrics(report, result.best.class_names));
        write_text(out / "confusion.csv", cm.to_csv(result.best.class_names));
        std::printf("test metrics (best checkpoint):\n%s",
                    format_metrics(report, result.best.class_names).c_str());
    }
    std::printf("artifacts written to %s\n", out.string().c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& split_name_arg, const CommonOpts& opts) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);

    SplitTag tag;
    if (split_name_arg == "train") tag = SplitTag::Train;
    else if (split_name_arg == "validation") tag = SplitTag::Validation;
    else if (split_name_arg == "test") tag = SplitTag::Test;
    else raise(ErrorKind::Config, "--split must be train, validation or test");

    DatasetSplit split;
    if (!data_path.empty()) {
        if (fs::is_directory(data_path)) split = load_image_folder(data_path, tag);
        else split = read_features(data_path, tag);
    } else {
        const DatasetSplits all = load_dataset(resolve_config(opts));
        split = tag == SplitTag::Train ? all.train
                : tag == SplitTag::Validation ? all.validation
                                              : all.test;
    }
    if (split.samples.empty()) raise(ErrorKind::Data, "selected split is empty");

    auto [cm, report] = evaluate(ckpt, split);
    std::printf("%s", format_metrics(report, ckpt.class_names).c_str());
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        write_text(fs::path(opts.out_dir) / "confusion.csv", cm.to_csv(ckpt.class_names));
        write_text(fs::path(opts.out_dir) / "metrics.txt",
                   format_metrics(report, ckpt.class_names));
    }
    return 0;
}

int cmd_ablate(const CommonOpts& opts) {
    EngineConfig config = resolve_config(opts);
    const DatasetSplits data = load_dataset(config);
    std::printf("ablation over 4 loss modes, seed=%llu\n",
                static_cast<unsigned long long>(config.train.seed));
    const std::vector<AblationRow> rows = run_ablation(config.train, data);
    const std::string csv = ablation_csv(rows);
    std::printf("%s", csv.c_str());
    const fs::path out = opts.out_dir.empty() ? fs::path("out") : fs::path(opts.out_dir);
    fs::create_directories(out);
    write_text(out / "ablation.csv", csv);
    return 0;
}

int cmd_gradcheck(uint64_t seed, size_t trials, double perturb) {
    const std::vector<ComponentCheck> checks = run_gradcheck_suite(seed, trials, 1e-5, perturb);
    bool ok = true;
    std::printf("%-8s  %9s  %7s  %12s\n", "component", "instances", "coords", "max_rel_err");
    for (const ComponentCheck& c : checks) {
        std::printf("%-8s  %9zu  %7zu  %12.3e%s\n", c.component.c_str(), c.instances,
                    c.coords_checked, c.max_rel_error,
                    c.max_rel_error < 1e-4 ? "" : "  BREACH");
        ok = ok && c.max_rel_error < 1e-4;
    }
    if (!ok) {
        std::fprintf(stderr, "gradcheck: relative error threshold 1e-4 breached\n");
        return 3;
    }
    return 0;
}

int cmd_synth(const CommonOpts& opts) {
    EngineConfig config = resolve_config(opts);
    const DatasetSplits splits = synth_dataset(config.synth);
    const fs::path out = opts.out_dir.empty() ? fs::path("out") : fs::path(opts.out_dir);
    fs::create_directories(out);
    write_features((out / "train.mfv").string(), splits.train);
    write_features((out / "validation.mfv").string(), splits.validation);
    write_features((out / "test.mfv").string(), splits.test);
    std::printf("wrote %zu/%zu/%zu samples (C=%zu, F=%zu) to %s\n",
                splits.train.samples.size(), splits.validation.samples.size(),
                splits.test.samples.size(), config.synth.classes,
                config.synth.feature_dim, out.string().c_str());
    return 0;
}

int cmd_features_inspect(const std::string& path) {
    const FeatureFileHeader h = inspect_features(path);
    std::printf("%s: N=%u F=%u C=%u\n", path.c_str(), h.sample_count, h.feature_dim,
                h.class_count);
    return 0;
}

int cmd_features_extract(const std::string& ckpt_path, const std::string& data_root,
                         const std::string& split_name_arg, const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.model.extractor.kind != ExtractorKind::SmallCnn)
        raise(ErrorKind::Data, "checkpoint has no trainable extractor to run");

    SplitTag tag;
    if (split_name_arg == "train") tag = SplitTag::Train;
    else if (split_name_arg == "validation") tag = SplitTag::Validation;
    else if (split_name_arg == "test") tag = SplitTag::Test;
    else raise(ErrorKind::Config, "--split must be train, validation or test");

    const DatasetSplit images = load_image_folder(data_root, tag);
    DatasetSplit features;
    features.tag = tag;
    features.class_names = images.class_names;
    for (const Sample& s : images.samples) {
        Tensor img = eval_transform(s.input, ckpt.config.augment);
        img = resize_bilinear(img, ckpt.config.cnn_input_size, ckpt.config.cnn_input_size);
        features.samples.push_back({cnn_forward(img, ckpt.model.extractor.cnn), s.label,
                                    s.source_id});
    }
    write_features(out_path, features);
    std::printf("wrote %zu feature vectors (F=%zu) to %s\n", features.samples.size(),
                static_cast<size_t>(SmallCnn::kFeatureDim), out_path.c_str());
    return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_loss_mode = false) {
    cmd->add_option("--config", opts.config_path, "configuration file (key=value lines)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", opts.seed, "override train.seed and synth.seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    if (with_loss_mode)
        cmd->add_option("--loss-mode", opts.loss_mode, "ce | center | arc | arc+center");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fgml: dual-loss metric-learning training engine"};
    app.require_subcommand(1);

    CommonOpts train_opts, ablate_opts, synth_opts, eval_opts;

    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_common(train_cmd, train_opts, true);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    std::string eval_ckpt, eval_data, eval_split = "test";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "dataset folder root or feature file");
    eval_cmd->add_option("--split", eval_split, "train | validation | test");
    add_common(eval_cmd, eval_opts);

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the four-way loss ablation");
    add_common(ablate_cmd, ablate_opts);

    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    uint64_t grad_seed = 42;
    size_t grad_trials = 100;
    double grad_perturb = 0.0;
    grad_cmd->add_option("--seed", grad_seed, "rng seed");
    grad_cmd->add_option("--trials", grad_trials, "instances per component");
    grad_cmd->add_option("--perturb", grad_perturb,
                         "test hook: corrupt one analytic gradient coordinate");

    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic feature dataset");
    add_common(synth_cmd, synth_opts);

    CLI::App* feat_cmd = app.add_subcommand("features", "feature-file tooling");
    feat_cmd->require_subcommand(1);
    CLI::App* feat_inspect = feat_cmd->add_subcommand("inspect", "print a feature-file header");
    std::string inspect_path;
    feat_inspect->add_option("file", inspect_path, "feature file")->required();
    CLI::App* feat_extract =
        feat_cmd->add_subcommand("extract", "run a checkpointed extractor over images");
    std::string ex_ckpt, ex_data, ex_split = "train", ex_out;
    feat_extract->add_option("--checkpoint", ex_ckpt, "checkpoint file")->required();
    feat_extract->add_option("--data", ex_data, "image dataset root")->required();
    feat_extract->add_option("--split", ex_split, "train | validation | test");
    feat_extract->add_option("--out", ex_out, "output feature file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_split, eval_opts);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate_opts);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed, grad_trials, grad_perturb);
        if (synth_cmd->parsed()) return cmd_synth(synth_opts);
        if (feat_cmd->parsed()) {
            if (feat_inspect->parsed()) return cmd_features_inspect(inspect_path);
            if (feat_extract->parsed())
                return cmd_features_extract(ex_ckpt, ex_data, ex_split, ex_out);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
