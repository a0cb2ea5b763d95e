#pragma once

#include <map>
#include <string>
#include <vector>

#include "lcgnn/blocking.hpp"
#include "lcgnn/graph.hpp"
#include "lcgnn/synthetic.hpp"

namespace lcgnn::io {

/// Edge-list text: one "src dst" pair of decimal integers per line, lines
/// starting with '#' ignored. Node count is not part of the format.
std::vector<Edge> read_edge_list(const std::string& path);
void write_edge_list(const std::string& path, const Graph& g);

/// Feature matrix, binary layout: two little-endian u64 (n, d) followed by
/// n·d little-endian f32, row-major. Paths ending in .csv use n rows of d
/// comma-separated values instead.
DenseMatrix read_features(const std::string& path);
void write_features(const std::string& path, const DenseMatrix& x);

/// One decimal class id per line.
std::vector<int> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int>& labels);

/// One character per line: t (train), v (validation), s (test).
std::vector<SplitTag> read_split(const std::string& path);
void write_split(const std::string& path, const std::vector<SplitTag>& split);

struct Dataset {
    Graph graph;
    DenseMatrix features;
    std::vector<int> labels;
    std::vector<SplitTag> split;
};

/// Loads and cross-validates the four dataset files. The feature row count
/// is authoritative for n.
Dataset load_dataset(const std::string& edges_path, const std::string& features_path,
                     const std::string& labels_path, const std::string& split_path);

void write_dataset(const std::string& dir, const SyntheticDataset& ds);

/// FNV-1a over the canonical edge list, raw f32 feature bits, and labels.
std::uint64_t dataset_hash(const Graph& g, const DenseMatrix& features,
                           const std::vector<int>& labels);

/// Precomputed-feature container, binary little-endian: magic "LCPF", u32
/// version, u64 n, u64 d, u64 source layer count, u64 dataset hash, u64
/// power count, the sorted powers as u64, then one row-major f64 matrix per
/// power. Byte-identical for identical inputs.
void write_lcpf(const std::string& path, const PrecomputedFeatures& features);
PrecomputedFeatures read_lcpf(const std::string& path);

/// Sidecar manifest: "key = value" text carrying the dataset hash, the
/// solved plan, and wall-clock fields (the latter excluded from determinism
/// comparisons).
void write_manifest(const std::string& path, const std::map<std::string, std::string>& fields);
std::map<std::string, std::string> read_manifest(const std::string& path);

}  // namespace lcgnn::io
