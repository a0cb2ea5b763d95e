#include "lcgnn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lcgnn/errors.hpp"
#include "lcgnn/oracle.hpp"

namespace lcgnn {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Canonical config rendering: the hash of this string names the default run
/// directory. Wall-clock never enters.
std::string config_signature(const RunConfig& cfg) {
    std::ostringstream os;
    if (cfg.data) {
        os << "data:" << cfg.data->edges << "," << cfg.data->features << "," << cfg.data->labels
           << "," << cfg.data->split << ";";
    }
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        os << "synthetic:" << s.n << "," << s.classes << "," << s.feature_dim << "," << s.homophily
           << "," << (s.mode == FeatureMode::linear ? "linear" : "xor") << "," << s.seed << ","
           << s.avg_degree << "," << s.noise_sigma << ";";
    }
    os << "model:" << to_string(cfg.family) << ",K=" << cfg.conv_layers << ",T=" << cfg.mlp_layers
       << "," << to_string(cfg.combine) << "," << to_string(cfg.activation) << ";";
    const TrainConfig& t = cfg.train;
    os << "train:" << t.learning_rate << "," << t.weight_decay << "," << t.dropout << ","
       << t.input_dropout << "," << t.batch_size << "," << t.patience << "," << t.max_epochs << ","
       << t.hidden_dim << "," << t.seed << "," << (t.precision == Precision::f32 ? "f32" : "f64")
       << "," << t.attn_init << "," << t.freeze_attn << ";";
    os << "budget:" << cfg.coeffs.alpha_a << "," << cfg.coeffs.alpha_s << "," << cfg.coeffs.alpha_d
       << "," << cfg.coeffs.beta_s << "," << cfg.coeffs.beta_x << "," << cfg.gpu_budget_bytes
       << ";";
    os << "lcpf:" << cfg.lcpf_path << ";bench:" << cfg.bench_repeats;
    return os.str();
}

std::string hex16(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
}

std::string plan_report_text(const BudgetModel& bm, Index a, Index b, Index c) {
    std::ostringstream os;
    os << "[budget]\n";
    os << "alpha_a = " << bm.alpha_a << "\nalpha_s = " << bm.alpha_s
       << "\nalpha_d = " << bm.alpha_d << "\nbeta_s = " << bm.beta_s << "\nbeta_x = " << bm.beta_x
       << "\n";
    os << "vol_a = " << fmt("%.1f", bm.vol_a) << "\nvol_s = " << fmt("%.1f", bm.vol_s)
       << "\nvol_d = " << fmt("%.1f", bm.vol_d) << "\nvol_x = " << fmt("%.1f", bm.vol_x)
       << "\nvol_gpu = " << fmt("%.1f", bm.vol_gpu) << "\n";
    os << "[plan]\n";
    os << "a = " << a << "\n";
    os << "norm_block_estimate = " << fmt("%.3f", bm.norm_block_estimate(a)) << "\n";
    os << "norm_slack = " << fmt("%.3f", bm.vol_gpu - bm.norm_block_estimate(a)) << "\n";
    os << "b = " << b << "\nc = " << c << "\n";
    os << "agg_block_estimate = " << fmt("%.3f", bm.agg_block_estimate(b, c)) << "\n";
    os << "agg_slack = " << fmt("%.3f", bm.vol_gpu - bm.agg_block_estimate(b, c)) << "\n";
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    if (data.has_value() == synthetic.has_value())
        throw ConfigError(
            "data source: exactly one of dataset paths and synthetic parameters must be given");
    if (data) {
        const std::pair<const char*, const std::string*> files[] = {{"edges", &data->edges},
                                                                    {"features", &data->features},
                                                                    {"labels", &data->labels},
                                                                    {"split", &data->split}};
        for (const auto& [name, path] : files) {
            if (path->empty()) throw ConfigError(std::string(name) + ": path must not be empty");
            if (!fs::exists(*path))
                throw ConfigError(std::string(name) + ": file does not exist: " + *path);
        }
    }
    if (synthetic) synthetic->validate();
    if (conv_layers < 1) throw ConfigError("conv_layers: must be at least 1");
    if (mlp_layers < 1) throw ConfigError("mlp_layers: must be at least 1");
    if (gpu_budget_bytes <= 0.0) throw ConfigError("gpu_budget_bytes: must be positive");
    if (bench_repeats < 1) throw ConfigError("bench_repeats: must be at least 1");
    train.validate();
    if (!lcpf_path.empty() && !fs::exists(lcpf_path))
        throw ConfigError("lcpf: file does not exist: " + lcpf_path);
}

LoadedData load_or_generate(const RunConfig& cfg) {
    if (cfg.data) {
        io::Dataset ds = io::load_dataset(cfg.data->edges, cfg.data->features, cfg.data->labels,
                                          cfg.data->split);
        const std::uint64_t hash = io::dataset_hash(ds.graph, ds.features, ds.labels);
        return LoadedData{std::move(ds.graph), std::move(ds.features), std::move(ds.labels),
                          std::move(ds.split), hash};
    }
    SyntheticDataset ds = gen_synthetic(*cfg.synthetic);
    const std::uint64_t hash = io::dataset_hash(ds.graph, ds.features, ds.labels);
    return LoadedData{std::move(ds.graph), std::move(ds.features), std::move(ds.labels),
                      std::move(ds.split), hash};
}

ModelSpec model_spec_for(const RunConfig& cfg, Index feature_dim, Index classes) {
    ModelSpec spec;
    spec.family = cfg.family;
    spec.conv_layers = cfg.conv_layers;
    spec.mlp_layers = cfg.mlp_layers;
    spec.combine = cfg.combine;
    spec.activation = cfg.activation;
    spec.dims = Dims{feature_dim, cfg.train.hidden_dim, classes};
    spec.validate();
    return spec;
}

std::string resolve_out_dir(const RunConfig& cfg) {
    std::string dir = cfg.out_dir;
    if (dir.empty()) {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(now).count();
        dir = "runs/" + hex16(fnv1a(config_signature(cfg))) + "-" + std::to_string(us);
    }
    fs::create_directories(dir);
    return dir;
}

LcTransformResult run_transform(const ModelSpec& spec, std::ostream& out) {
    const Formula original = build_formula(spec);
    LcTransformResult result = lc_transform(original);
    out << "original: " << render_formula(original) << "\n";
    for (std::size_t i = 0; i < result.steps.size(); ++i)
        out << "step " << (i + 1) << ": " << render_formula(result.steps[i]) << "\n";
    out << "transformed: " << render_formula(result.formula) << "\n";
    out << "powers:";
    for (int k : result.plan.powers) out << " " << k;
    out << "\n";
    return result;
}

namespace {

BudgetModel model_for_loaded(const RunConfig& cfg, const LoadedData& data) {
    const SparseMatrix a_tilde = add_self_loops(data.graph);
    return BudgetModel::for_data(data.graph.num_nodes(), a_tilde.nnz(), data.features.cols,
                                 cfg.coeffs, cfg.gpu_budget_bytes);
}

}  // namespace

PlanOutcome run_plan(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const LoadedData data = load_or_generate(cfg);
    PlanOutcome outcome;
    outcome.model = model_for_loaded(cfg, data);
    outcome.a = solve_norm_blocks(outcome.model);
    std::tie(outcome.b, outcome.c) = solve_agg_blocks(outcome.model);
    const std::string report = plan_report_text(outcome.model, outcome.a, outcome.b, outcome.c);
    const std::string dir = resolve_out_dir(cfg);
    outcome.report_path = dir + "/plan.txt";
    write_text_file(outcome.report_path, report);
    out << report;
    return outcome;
}

PrecomputeOutcome run_precompute(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const LoadedData data = load_or_generate(cfg);
    const ModelSpec spec = model_spec_for(
        cfg, data.features.cols,
        1 + *std::max_element(data.labels.begin(), data.labels.end()));

    const LcTransformResult lc = lc_transform(build_formula(spec));
    const BudgetModel bm = model_for_loaded(cfg, data);
    const Index a = solve_norm_blocks(bm);
    const auto [b, c] = solve_agg_blocks(bm);

    const auto t0 = std::chrono::steady_clock::now();
    BudgetedExecutor exec(bm);
    const SparseMatrix s = block_normalize(data.graph, a, exec);
    PrecomputedFeatures all =
        block_feature_aggregation(s, data.features, lc.plan.max_power(), b, c, exec);
    all.dataset_hash = data.hash;
    const PrecomputedFeatures stored = all.subset(lc.plan, data.features);
    const double precompute_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const std::string dir = resolve_out_dir(cfg);
    PrecomputeOutcome outcome;
    outcome.a = a;
    outcome.b = b;
    outcome.c = c;
    outcome.precompute_ms = precompute_ms;
    outcome.lcpf_path = dir + "/features.lcpf";
    outcome.manifest_path = dir + "/features.manifest";
    outcome.plan_report_path = dir + "/plan.txt";
    io::write_lcpf(outcome.lcpf_path, stored);
    io::write_manifest(outcome.manifest_path,
                       {{"dataset_hash", hex16(data.hash)},
                        {"plan_a", std::to_string(a)},
                        {"plan_b", std::to_string(b)},
                        {"plan_c", std::to_string(c)},
                        {"peak_estimate_bytes", fmt("%.1f", exec.peak_estimate())},
                        {"precompute_ms", fmt("%.3f", precompute_ms)}});
    write_text_file(outcome.plan_report_path, plan_report_text(bm, a, b, c));
    log << "wrote " << outcome.lcpf_path << " (powers";
    for (int k : lc.plan.powers) log << " " << k;
    log << ", plan a=" << a << " b=" << b << " c=" << c << ")\n";
    return outcome;
}

TrainOutcome run_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const LoadedData data = load_or_generate(cfg);
    const ModelSpec spec = model_spec_for(
        cfg, data.features.cols,
        1 + *std::max_element(data.labels.begin(), data.labels.end()));

    PrecomputedFeatures features;
    double precompute_ms = 0.0;
    if (!cfg.lcpf_path.empty()) {
        features = io::read_lcpf(cfg.lcpf_path);
        if (features.n != data.graph.num_nodes())
            throw ConfigError("lcpf: row count does not match the dataset");
    } else {
        const LcTransformResult lc = lc_transform(build_formula(spec));
        const BudgetModel bm = model_for_loaded(cfg, data);
        const Index a = solve_norm_blocks(bm);
        const auto [b, c] = solve_agg_blocks(bm);
        const auto t0 = std::chrono::steady_clock::now();
        BudgetedExecutor exec(bm);
        const SparseMatrix s = block_normalize(data.graph, a, exec);
        PrecomputedFeatures all =
            block_feature_aggregation(s, data.features, lc.plan.max_power(), b, c, exec);
        all.dataset_hash = data.hash;
        features = all.subset(lc.plan, data.features);
        precompute_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
    }

    const TrainResult result = train(spec, features, data.labels, data.split, cfg.train,
                                     precompute_ms);

    std::vector<Index> test_rows;
    for (std::size_t i = 0; i < data.split.size(); ++i)
        if (data.split[i] == SplitTag::test) test_rows.push_back(static_cast<Index>(i));
    const double test_acc =
        evaluate_accuracy(spec, result.params, features, data.labels, test_rows);

    const std::string dir = resolve_out_dir(cfg);
    TrainOutcome outcome;
    outcome.test_acc = test_acc;
    outcome.best_epoch = result.history.best_epoch;
    outcome.history_path = dir + "/history.csv";
    outcome.summary_path = dir + "/summary.txt";

    std::ostringstream csv;
    csv << "epoch,train_loss,val_acc,cum_time_ms\n";
    char line[160];
    for (const EpochRecord& r : result.history.epochs) {
        std::snprintf(line, sizeof(line), "%lld,%.9g,%.6f,%.3f\n",
                      static_cast<long long>(r.epoch), r.train_loss, r.val_acc, r.cum_ms);
        csv << line;
    }
    write_text_file(outcome.history_path, csv.str());

    const double total_ms =
        result.history.precompute_ms +
        (result.history.epochs.empty() ? 0.0 : result.history.epochs.back().cum_ms);
    double best_val = 0.0;
    for (const EpochRecord& r : result.history.epochs) best_val = std::max(best_val, r.val_acc);
    std::ostringstream summary;
    summary << "test_acc = " << fmt("%.6f", test_acc) << "\n";
    summary << "best_val_acc = " << fmt("%.6f", best_val) << "\n";
    summary << "best_epoch = " << result.history.best_epoch << "\n";
    summary << "epochs_run = " << result.history.epochs.size() << "\n";
    summary << "precompute_ms = " << fmt("%.3f", result.history.precompute_ms) << "\n";
    summary << "total_ms = " << fmt("%.3f", total_ms) << "\n";
    write_text_file(outcome.summary_path, summary.str());

    log << "test_acc " << fmt("%.4f", test_acc) << " best_epoch " << result.history.best_epoch
        << " -> " << outcome.summary_path << "\n";
    return outcome;
}

BenchOutcome run_bench_cmd(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const LoadedData data = load_or_generate(cfg);
    const BudgetModel bm = model_for_loaded(cfg, data);
    const BenchReport report =
        run_bench(data.graph, data.features, cfg.conv_layers, bm, cfg.bench_repeats);

    const std::string dir = resolve_out_dir(cfg);
    BenchOutcome outcome;
    outcome.csv_path = dir + "/bench.csv";
    outcome.text_path = dir + "/bench.txt";
    {
        std::ofstream csv(outcome.csv_path);
        write_bench_csv(report, csv);
        std::ofstream text(outcome.text_path);
        write_bench_text(report, text);
    }
    write_bench_text(report, log);
    return outcome;
}

std::string run_gen_synthetic(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (!cfg.synthetic) throw ConfigError("synthetic: generator parameters required");
    const SyntheticDataset ds = gen_synthetic(*cfg.synthetic);
    const std::string dir = resolve_out_dir(cfg);
    io::write_dataset(dir, ds);
    log << "wrote dataset (" << ds.graph.num_nodes() << " nodes, " << ds.graph.num_edges()
        << " edges) to " << dir << "\n";
    return dir;
}

void run_calibrate(std::span<const Index> probe_sizes, std::ostream& out) {
    HostMemoryModel host;
    const CalibrationResult result = calibrate_budget(host, probe_sizes);
    auto print = [&out](const char* name, const CoefficientFit& fit) {
        out << name << " = " << fmt("%.6f", fit.slope) << " (intercept "
            << fmt("%.3f", fit.intercept) << ", residual fraction "
            << fmt("%.6f", fit.residual_fraction) << ", " << fit.samples << " samples)\n";
    };
    print("alpha_a", result.alpha_a);
    print("alpha_s", result.alpha_s);
    print("alpha_d", result.alpha_d);
    print("beta_s", result.beta_s);
    print("beta_x", result.beta_x);
}

}  // namespace lcgnn
