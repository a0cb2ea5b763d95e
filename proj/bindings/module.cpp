#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>

#include "lcgnn/bench.hpp"
#include "lcgnn/errors.hpp"
#include "lcgnn/io.hpp"
#include "lcgnn/oracle.hpp"
#include "lcgnn/pipeline.hpp"
#include "lcgnn/trainer.hpp"

namespace py = pybind11;
using namespace lcgnn;

namespace {

DenseMatrix dense_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-d array");
    DenseMatrix m(arr.shape(0), arr.shape(1));
    std::memcpy(m.values.data(), arr.data(), m.values.size() * sizeof(double));
    return m;
}

py::array_t<double> numpy_from_dense(const DenseMatrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::memcpy(arr.mutable_data(), m.values.data(), m.values.size() * sizeof(double));
    return arr;
}

Graph graph_from_numpy(Index n, const py::array_t<Index, py::array::c_style | py::array::forcecast>& edges) {
    if (edges.ndim() != 2 || (edges.shape(0) > 0 && edges.shape(1) != 2))
        throw py::value_error("edges must have shape (m, 2)");
    std::vector<Edge> list;
    list.reserve(static_cast<std::size_t>(edges.shape(0)));
    auto view = edges.unchecked<2>();
    for (py::ssize_t i = 0; i < edges.shape(0); ++i) list.push_back({view(i, 0), view(i, 1)});
    return Graph::from_edges(n, std::move(list));
}

ModelFamily family_from_string(const std::string& s) {
    if (s == "gcn") return ModelFamily::gcn;
    if (s == "sgc") return ModelFamily::sgc;
    if (s == "jknet") return ModelFamily::jknet;
    if (s == "gprgnn") return ModelFamily::gprgnn;
    throw py::value_error("unsupported model family: " + s);
}

ModelSpec spec_from_args(const std::string& family, int layers, int mlp_layers,
                         const std::string& combine, const std::string& activation, Index d,
                         Index h, Index y) {
    ModelSpec spec;
    spec.family = family_from_string(family);
    spec.conv_layers = layers;
    spec.mlp_layers = mlp_layers;
    spec.combine = combine == "max" ? CombineKind::max : CombineKind::concat;
    spec.activation = activation == "identity" ? ActivationKind::identity : ActivationKind::relu;
    spec.dims = Dims{d, h, y};
    return spec;
}

TrainConfig config_from_kwargs(const py::dict& kwargs) {
    TrainConfig cfg;
    for (auto item : kwargs) {
        const auto key = item.first.cast<std::string>();
        if (key == "learning_rate") cfg.learning_rate = item.second.cast<double>();
        else if (key == "weight_decay") cfg.weight_decay = item.second.cast<double>();
        else if (key == "dropout") cfg.dropout = item.second.cast<double>();
        else if (key == "input_dropout") cfg.input_dropout = item.second.cast<double>();
        else if (key == "batch_size") cfg.batch_size = item.second.cast<Index>();
        else if (key == "patience") cfg.patience = item.second.cast<Index>();
        else if (key == "max_epochs") cfg.max_epochs = item.second.cast<Index>();
        else if (key == "hidden_dim") cfg.hidden_dim = item.second.cast<Index>();
        else if (key == "seed") cfg.seed = item.second.cast<std::uint64_t>();
        else if (key == "precision")
            cfg.precision = item.second.cast<std::string>() == "f32" ? Precision::f32 : Precision::f64;
        else if (key == "attn_init") cfg.attn_init = item.second.cast<double>();
        else if (key == "freeze_attn") cfg.freeze_attn = item.second.cast<bool>();
        else if (key == "activation")
            cfg.activation = item.second.cast<std::string>() == "identity" ? ActivationKind::identity
                                                                           : ActivationKind::relu;
        else throw py::value_error("unknown train config key: " + key);
    }
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_lcgnn, m) {
    m.doc() = "Linear-convolution GNN toolkit: formula rewriting, budgeted block "
              "precomputation, and training on precomputed features.";

    py::register_exception<Error>(m, "LcgnnError");

    m.def(
        "transform",
        [](const std::string& family, int layers, int mlp_layers, const std::string& combine,
           const std::string& activation) {
            ModelSpec spec = spec_from_args(family, layers, mlp_layers, combine, activation, 1, 1, 1);
            const Formula original = build_formula(spec);
            const LcTransformResult result = lc_transform(original);
            py::list steps;
            for (const Formula& f : result.steps) steps.append(render_formula(f));
            py::dict out;
            out["original"] = render_formula(original);
            out["transformed"] = render_formula(result.formula);
            out["steps"] = steps;
            out["powers"] = result.plan.powers;
            return out;
        },
        py::arg("family"), py::arg("layers") = 2, py::arg("mlp_layers") = 2,
        py::arg("combine") = "concat", py::arg("activation") = "relu",
        "Rewrite a model formulation; returns the original and transformed "
        "renderings, the rewrite trace, and the filter powers to precompute.");

    m.def(
        "gen_synthetic",
        [](Index n, int classes, Index feature_dim, double homophily, const std::string& mode,
           std::uint64_t seed, double avg_degree, double noise) {
            SyntheticParams params;
            params.n = n;
            params.classes = classes;
            params.feature_dim = feature_dim;
            params.homophily = homophily;
            params.mode = mode == "xor" ? FeatureMode::xor_signs : FeatureMode::linear;
            params.seed = seed;
            params.avg_degree = avg_degree;
            params.noise_sigma = noise;
            const SyntheticDataset ds = gen_synthetic(params);
            py::array_t<Index> edges({static_cast<py::ssize_t>(ds.graph.num_edges()),
                                      static_cast<py::ssize_t>(2)});
            auto edge_view = edges.mutable_unchecked<2>();
            for (Index i = 0; i < ds.graph.num_edges(); ++i) {
                edge_view(i, 0) = ds.graph.edges()[static_cast<std::size_t>(i)].src;
                edge_view(i, 1) = ds.graph.edges()[static_cast<std::size_t>(i)].dst;
            }
            std::string split;
            split.reserve(ds.split.size());
            for (SplitTag tag : ds.split) split.push_back(static_cast<char>(tag));
            py::dict out;
            out["num_nodes"] = ds.graph.num_nodes();
            out["edges"] = edges;
            out["features"] = numpy_from_dense(ds.features);
            out["labels"] = ds.labels;
            out["split"] = split;
            return out;
        },
        py::arg("n"), py::arg("classes"), py::arg("feature_dim"), py::arg("homophily") = 0.9,
        py::arg("mode") = "linear", py::arg("seed") = 0, py::arg("avg_degree") = 10.0,
        py::arg("noise") = 0.0);

    m.def(
        "normalized_adjacency",
        [](Index n, const py::array_t<Index, py::array::c_style | py::array::forcecast>& edges) {
            const Graph g = graph_from_numpy(n, edges);
            const SparseMatrix s = normalize_adjacency(add_self_loops(g), degree_vector(add_self_loops(g)));
            py::array_t<Index> rows(s.nnz()), cols(s.nnz());
            py::array_t<double> vals(s.nnz());
            for (Index i = 0; i < s.nnz(); ++i) {
                rows.mutable_at(i) = s.triplets[static_cast<std::size_t>(i)].row;
                cols.mutable_at(i) = s.triplets[static_cast<std::size_t>(i)].col;
                vals.mutable_at(i) = s.triplets[static_cast<std::size_t>(i)].value;
            }
            return py::make_tuple(rows, cols, vals);
        },
        py::arg("n"), py::arg("edges"),
        "Self-loop augmented symmetric degree normalization as COO arrays.");

    m.def(
        "solve_norm_blocks",
        [](double alpha_a, double alpha_s, double alpha_d, double vol_a, double vol_s, double vol_d,
           double vol_gpu) {
            BudgetModel bm;
            bm.alpha_a = alpha_a;
            bm.alpha_s = alpha_s;
            bm.alpha_d = alpha_d;
            bm.vol_a = vol_a;
            bm.vol_s = vol_s;
            bm.vol_d = vol_d;
            bm.vol_x = 1.0;
            bm.vol_gpu = vol_gpu;
            return solve_norm_blocks(bm);
        },
        py::arg("alpha_a"), py::arg("alpha_s"), py::arg("alpha_d"), py::arg("vol_a"),
        py::arg("vol_s"), py::arg("vol_d"), py::arg("vol_gpu"));

    m.def(
        "solve_agg_blocks",
        [](double beta_s, double beta_x, double vol_s, double vol_x, double vol_gpu) {
            BudgetModel bm;
            bm.beta_s = beta_s;
            bm.beta_x = beta_x;
            bm.vol_a = 1.0;
            bm.vol_s = vol_s;
            bm.vol_d = 1.0;
            bm.vol_x = vol_x;
            bm.vol_gpu = vol_gpu;
            return solve_agg_blocks(bm);
        },
        py::arg("beta_s"), py::arg("beta_x"), py::arg("vol_s"), py::arg("vol_x"),
        py::arg("vol_gpu"));

    m.def(
        "precompute",
        [](Index n, const py::array_t<Index, py::array::c_style | py::array::forcecast>& edges,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& features, int K,
           Index b, Index c) {
            const Graph g = graph_from_numpy(n, edges);
            const DenseMatrix x = dense_from_numpy(features);
            if (x.rows != n) throw py::value_error("feature rows must equal n");
            const SparseMatrix a_tilde = add_self_loops(g);
            BudgetModel bm = BudgetModel::for_data(n, a_tilde.nnz(), x.cols, {}, 1e18);
            BudgetedExecutor exec(bm);
            const SparseMatrix s = block_normalize(g, 1, exec);
            const PrecomputedFeatures out = block_feature_aggregation(s, x, K, b, c, exec);
            py::dict result;
            for (const auto& [power, matrix] : out.per_power)
                result[py::int_(power)] = numpy_from_dense(matrix);
            return result;
        },
        py::arg("n"), py::arg("edges"), py::arg("features"), py::arg("K") = 2, py::arg("b") = 1,
        py::arg("c") = 1,
        "Block-wise S^k X for k = 1..K; keys of the returned dict are the powers.");

    m.def(
        "train_on_features",
        [](const std::string& family, int layers, int mlp_layers, const std::string& combine,
           const py::dict& feature_map, const std::vector<int>& labels, const std::string& split,
           const py::dict& config) {
            TrainConfig cfg = config_from_kwargs(config);
            PrecomputedFeatures features;
            for (auto item : feature_map) {
                const int power = item.first.cast<int>();
                features.per_power.emplace(
                    power, dense_from_numpy(
                               item.second.cast<py::array_t<double, py::array::c_style |
                                                                        py::array::forcecast>>()));
            }
            if (features.per_power.empty()) throw py::value_error("no feature powers given");
            features.n = features.per_power.begin()->second.rows;
            features.d = features.per_power.begin()->second.cols;
            features.source_layers = layers;
            const Index y = 1 + *std::max_element(labels.begin(), labels.end());
            const ModelSpec spec = spec_from_args(family, layers, mlp_layers, combine, "relu",
                                                  features.d, cfg.hidden_dim, y);
            std::vector<SplitTag> tags;
            tags.reserve(split.size());
            for (char ch : split) tags.push_back(static_cast<SplitTag>(ch));
            const TrainResult result = train(spec, features, labels, tags, cfg);
            std::vector<Index> test_rows;
            for (std::size_t i = 0; i < tags.size(); ++i)
                if (tags[i] == SplitTag::test) test_rows.push_back(static_cast<Index>(i));
            py::dict out;
            out["test_acc"] = evaluate_accuracy(spec, result.params, features, labels, test_rows);
            out["best_epoch"] = result.history.best_epoch;
            out["epochs_run"] = result.history.epochs.size();
            double best_val = 0.0;
            for (const EpochRecord& r : result.history.epochs)
                best_val = std::max(best_val, r.val_acc);
            out["best_val_acc"] = best_val;
            return out;
        },
        py::arg("family"), py::arg("layers"), py::arg("mlp_layers"), py::arg("combine"),
        py::arg("features"), py::arg("labels"), py::arg("split"), py::arg("config"),
        "Mini-batch training with early stopping on precomputed feature powers.");
}
