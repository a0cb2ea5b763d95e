// lcgnn command line: transforms GNN formulations into precomputation-friendly
// form, plans and runs memory-budgeted block precomputation, trains on the
// precomputed features, and benchmarks blocked against naive execution.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "lcgnn/errors.hpp"
#include "lcgnn/pipeline.hpp"

namespace {

using namespace lcgnn;

struct CliOptions {
    RunConfig cfg;
    std::string family = "gcn";
    std::string combine = "concat";
    std::string activation = "relu";
    std::string precision = "f64";
    std::string synth_mode = "linear";

    // synthetic generator staging area; promoted into cfg.synthetic when used
    SyntheticParams synth;
    bool use_synthetic = false;
    DataPaths paths;
};

ModelFamily parse_family(const std::string& s) {
    if (s == "gcn") return ModelFamily::gcn;
    if (s == "sgc") return ModelFamily::sgc;
    if (s == "jknet") return ModelFamily::jknet;
    if (s == "gprgnn") return ModelFamily::gprgnn;
    throw CLI::ValidationError("--model", "unsupported family: " + s);
}

void finalize(CliOptions& opt) {
    opt.cfg.family = parse_family(opt.family);
    opt.cfg.combine = opt.combine == "max" ? CombineKind::max : CombineKind::concat;
    opt.cfg.activation =
        opt.activation == "identity" ? ActivationKind::identity : ActivationKind::relu;
    opt.cfg.train.precision = opt.precision == "f32" ? Precision::f32 : Precision::f64;
    if (opt.use_synthetic) {
        opt.synth.mode = opt.synth_mode == "xor" ? FeatureMode::xor_signs : FeatureMode::linear;
        opt.cfg.synthetic = opt.synth;
        opt.cfg.data.reset();
    } else if (!opt.paths.edges.empty() || !opt.paths.features.empty() ||
               !opt.paths.labels.empty() || !opt.paths.split.empty()) {
        opt.cfg.data = opt.paths;
        opt.cfg.synthetic.reset();
    }
}

void add_model_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--model", opt.family, "Model family: gcn, sgc, jknet, gprgnn")
        ->check(CLI::IsMember({"gcn", "sgc", "jknet", "gprgnn"}));
    cmd->add_option("--layers", opt.cfg.conv_layers, "Number of convolution layers (K)");
    cmd->add_option("--mlp-layers", opt.cfg.mlp_layers, "MLP depth for gprgnn (T)");
    cmd->add_option("--combine", opt.combine, "jknet branch combination")
        ->check(CLI::IsMember({"concat", "max"}));
    cmd->add_option("--activation", opt.activation, "Activation kind")
        ->check(CLI::IsMember({"relu", "identity"}));
}

void add_data_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--edges", opt.paths.edges, "Edge-list file");
    cmd->add_option("--features", opt.paths.features, "Feature file (.bin or .csv)");
    cmd->add_option("--labels", opt.paths.labels, "Label file");
    cmd->add_option("--split", opt.paths.split, "Split file (t/v/s per line)");
    cmd->add_flag("--synthetic", opt.use_synthetic, "Use the synthetic generator instead of files");
    cmd->add_option("--n", opt.synth.n, "Synthetic node count");
    cmd->add_option("--classes", opt.synth.classes, "Synthetic class count");
    cmd->add_option("--feature-dim", opt.synth.feature_dim, "Synthetic feature dimension");
    cmd->add_option("--homophily", opt.synth.homophily, "Synthetic homophily in [0,1]");
    cmd->add_option("--mode", opt.synth_mode, "Synthetic feature mode")
        ->check(CLI::IsMember({"linear", "xor"}));
    cmd->add_option("--avg-degree", opt.synth.avg_degree, "Synthetic average degree");
    cmd->add_option("--noise", opt.synth.noise_sigma, "Synthetic feature noise (0 = per-mode default)");
    cmd->add_option("--gen-seed", opt.synth.seed, "Synthetic generator seed");
}

void add_budget_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--gpu-budget", opt.cfg.gpu_budget_bytes, "Device budget in bytes");
    cmd->add_option("--alpha-a", opt.cfg.coeffs.alpha_a, "Adjacency coefficient");
    cmd->add_option("--alpha-s", opt.cfg.coeffs.alpha_s, "Normalized-adjacency coefficient");
    cmd->add_option("--alpha-d", opt.cfg.coeffs.alpha_d, "Degree coefficient");
    cmd->add_option("--beta-s", opt.cfg.coeffs.beta_s, "Filter coefficient");
    cmd->add_option("--beta-x", opt.cfg.coeffs.beta_x, "Feature coefficient");
}

void add_train_options(CLI::App* cmd, CliOptions& opt) {
    TrainConfig& t = opt.cfg.train;
    cmd->add_option("--lr", t.learning_rate, "Learning rate");
    cmd->add_option("--weight-decay", t.weight_decay, "L2 weight decay");
    cmd->add_option("--dropout", t.dropout, "Dropout after hidden activations");
    cmd->add_option("--input-dropout", t.input_dropout, "Dropout on aggregated features (gprgnn)");
    cmd->add_option("--batch-size", t.batch_size, "Mini-batch size");
    cmd->add_option("--patience", t.patience, "Early-stopping patience in epochs");
    cmd->add_option("--max-epochs", t.max_epochs, "Epoch cap");
    cmd->add_option("--hidden", t.hidden_dim, "Hidden dimension");
    cmd->add_option("--seed", t.seed, "Training and initialization seed");
    cmd->add_option("--precision", opt.precision, "Arithmetic precision")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--attn-init", t.attn_init, "Attention bootstrap parameter (gprgnn)");
    cmd->add_flag("--freeze-attn", t.freeze_attn, "Keep attention at its initialization");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear-convolution GNN toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an ini file (flags override)");
    app.fallthrough();

    CliOptions opt;
    std::string out_dir;
    std::vector<Index> probe_sizes{64, 128, 256, 512};

    auto* transform = app.add_subcommand("transform", "Rewrite a model into its precomputation form");
    add_model_options(transform, opt);

    auto* plan = app.add_subcommand("plan", "Solve block counts for a budget");
    add_model_options(plan, opt);
    add_data_options(plan, opt);
    add_budget_options(plan, opt);

    auto* precompute = app.add_subcommand("precompute", "Block-wise normalization and aggregation");
    add_model_options(precompute, opt);
    add_data_options(precompute, opt);
    add_budget_options(precompute, opt);

    auto* train_cmd = app.add_subcommand("train", "Train on precomputed features");
    add_model_options(train_cmd, opt);
    add_data_options(train_cmd, opt);
    add_budget_options(train_cmd, opt);
    add_train_options(train_cmd, opt);
    train_cmd->add_option("--lcpf", opt.cfg.lcpf_path, "Existing precomputed-feature file");

    auto* bench = app.add_subcommand("bench", "Time naive against blocked precomputation");
    add_model_options(bench, opt);
    add_data_options(bench, opt);
    add_budget_options(bench, opt);
    bench->add_option("--repeats", opt.cfg.bench_repeats, "Timing repetitions");

    auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic dataset");
    add_data_options(gen, opt);

    auto* calibrate = app.add_subcommand("calibrate", "Estimate budget coefficients from probes");
    calibrate->add_option("--probe-sizes", probe_sizes, "Probe graph node counts");

    for (CLI::App* cmd : {transform, plan, precompute, train_cmd, bench, gen, calibrate})
        cmd->add_option("--out", out_dir, "Output directory (default: runs/<hash>-<timestamp>)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        finalize(opt);
        opt.cfg.out_dir = out_dir;
        if (gen->parsed() && !opt.use_synthetic) {
            opt.use_synthetic = true;
            opt.synth.mode = opt.synth_mode == "xor" ? FeatureMode::xor_signs : FeatureMode::linear;
            opt.cfg.synthetic = opt.synth;
            opt.cfg.data.reset();
        }
        if (transform->parsed()) {
            ModelSpec spec;
            spec.family = opt.cfg.family;
            spec.conv_layers = opt.cfg.conv_layers;
            spec.mlp_layers = opt.cfg.mlp_layers;
            spec.combine = opt.cfg.combine;
            spec.activation = opt.cfg.activation;
            run_transform(spec, std::cout);
        } else if (plan->parsed()) {
            run_plan(opt.cfg, std::cout);
        } else if (precompute->parsed()) {
            run_precompute(opt.cfg, std::cout);
        } else if (train_cmd->parsed()) {
            run_train(opt.cfg, std::cout);
        } else if (bench->parsed()) {
            run_bench_cmd(opt.cfg, std::cout);
        } else if (gen->parsed()) {
            run_gen_synthetic(opt.cfg, std::cout);
        } else if (calibrate->parsed()) {
            run_calibrate(probe_sizes, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
