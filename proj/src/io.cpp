#include "lcgnn/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcgnn/errors.hpp"

namespace lcgnn::io {

namespace {

std::ifstream open_in(const std::string& path, std::ios_base::openmode mode = std::ios_base::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return in;
}

std::ofstream open_out(const std::string& path, std::ios_base::openmode mode = std::ios_base::out) {
    std::ofstream out(path, mode);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError(path + ": truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw IoError(path + ": truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr char kLcpfMagic[4] = {'L', 'C', 'P', 'F'};
constexpr std::uint32_t kLcpfVersion = 1;

}  // namespace

std::vector<Edge> read_edge_list(const std::string& path) {
    auto in = open_in(path);
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        Index src, dst;
        if (!(ls >> src >> dst))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 'src dst'");
        edges.push_back({src, dst});
    }
    return edges;
}

void write_edge_list(const std::string& path, const Graph& g) {
    auto out = open_out(path);
    out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " undirected edges\n";
    for (const Edge& e : g.edges()) out << e.src << " " << e.dst << "\n";
}

DenseMatrix read_features(const std::string& path) {
    if (ends_with(path, ".csv")) {
        auto in = open_in(path);
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<double> row;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
            if (!rows.empty() && row.size() != rows.front().size())
                throw IoError(path + ": ragged csv row");
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw IoError(path + ": empty feature csv");
        DenseMatrix x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                x.at(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        return x;
    }
    auto in = open_in(path, std::ios_base::in | std::ios_base::binary);
    const auto n = static_cast<Index>(read_u64(in, path));
    const auto d = static_cast<Index>(read_u64(in, path));
    if (n < 0 || d < 0) throw IoError(path + ": invalid dimensions");
    DenseMatrix x(n, d);
    std::vector<float> row(static_cast<std::size_t>(d));
    for (Index r = 0; r < n; ++r) {
        if (!in.read(reinterpret_cast<char*>(row.data()),
                     static_cast<std::streamsize>(sizeof(float) * row.size())))
            throw IoError(path + ": truncated feature payload");
        for (Index c = 0; c < d; ++c)
            x.at(r, c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
    }
    return x;
}

void write_features(const std::string& path, const DenseMatrix& x) {
    auto out = open_out(path, std::ios_base::out | std::ios_base::binary);
    write_u64(out, static_cast<std::uint64_t>(x.rows));
    write_u64(out, static_cast<std::uint64_t>(x.cols));
    std::vector<float> row(static_cast<std::size_t>(x.cols));
    for (Index r = 0; r < x.rows; ++r) {
        for (Index c = 0; c < x.cols; ++c)
            row[static_cast<std::size_t>(c)] = static_cast<float>(x.at(r, c));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(float) * row.size()));
    }
}

std::vector<int> read_labels(const std::string& path) {
    auto in = open_in(path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        labels.push_back(std::stoi(line));
    }
    return labels;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
    auto out = open_out(path);
    for (int v : labels) out << v << "\n";
}

std::vector<SplitTag> read_split(const std::string& path) {
    auto in = open_in(path);
    std::vector<SplitTag> split;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const char c = line[0];
        if (c != 't' && c != 'v' && c != 's')
            throw IoError(path + ":" + std::to_string(lineno) + ": expected one of t, v, s");
        split.push_back(static_cast<SplitTag>(c));
    }
    return split;
}

void write_split(const std::string& path, const std::vector<SplitTag>& split) {
    auto out = open_out(path);
    for (SplitTag tag : split) out << static_cast<char>(tag) << "\n";
}

Dataset load_dataset(const std::string& edges_path, const std::string& features_path,
                     const std::string& labels_path, const std::string& split_path) {
    DenseMatrix features = read_features(features_path);
    std::vector<int> labels = read_labels(labels_path);
    std::vector<SplitTag> split = read_split(split_path);
    const Index n = features.rows;
    if (static_cast<Index>(labels.size()) != n)
        throw IoError(labels_path + ": " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(n) + " feature rows");
    if (static_cast<Index>(split.size()) != n)
        throw IoError(split_path + ": " + std::to_string(split.size()) + " split tags for " +
                      std::to_string(n) + " feature rows");
    Graph graph = Graph::from_edges(n, read_edge_list(edges_path));
    return Dataset{std::move(graph), std::move(features), std::move(labels), std::move(split)};
}

void write_dataset(const std::string& dir, const SyntheticDataset& ds) {
    std::filesystem::create_directories(dir);
    write_edge_list(dir + "/edges.txt", ds.graph);
    write_features(dir + "/features.bin", ds.features);
    write_labels(dir + "/labels.txt", ds.labels);
    write_split(dir + "/split.txt", ds.split);
}

std::uint64_t dataset_hash(const Graph& g, const DenseMatrix& features,
                           const std::vector<int>& labels) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t n = static_cast<std::uint64_t>(g.num_nodes());
    mix(&n, sizeof(n));
    for (const Edge& e : g.edges()) {
        mix(&e.src, sizeof(e.src));
        mix(&e.dst, sizeof(e.dst));
    }
    for (Index r = 0; r < features.rows; ++r)
        for (Index c = 0; c < features.cols; ++c) {
            const float v = static_cast<float>(features.at(r, c));
            mix(&v, sizeof(v));
        }
    for (int label : labels) mix(&label, sizeof(label));
    return h;
}

void write_lcpf(const std::string& path, const PrecomputedFeatures& features) {
    auto out = open_out(path, std::ios_base::out | std::ios_base::binary);
    out.write(kLcpfMagic, 4);
    write_u32(out, kLcpfVersion);
    write_u64(out, static_cast<std::uint64_t>(features.n));
    write_u64(out, static_cast<std::uint64_t>(features.d));
    write_u64(out, static_cast<std::uint64_t>(features.source_layers));
    write_u64(out, features.dataset_hash);
    write_u64(out, static_cast<std::uint64_t>(features.per_power.size()));
    for (const auto& [power, matrix] : features.per_power)
        write_u64(out, static_cast<std::uint64_t>(power));
    for (const auto& [power, matrix] : features.per_power) {
        if (matrix.rows != features.n || matrix.cols != features.d)
            throw IoError(path + ": power " + std::to_string(power) + " has inconsistent shape");
        out.write(reinterpret_cast<const char*>(matrix.values.data()),
                  static_cast<std::streamsize>(matrix.values.size() * sizeof(double)));
    }
}

PrecomputedFeatures read_lcpf(const std::string& path) {
    auto in = open_in(path, std::ios_base::in | std::ios_base::binary);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kLcpfMagic, 4) != 0)
        throw IoError(path + ": not a precomputed-feature file");
    const std::uint32_t version = read_u32(in, path);
    if (version != kLcpfVersion)
        throw IoError(path + ": unsupported version " + std::to_string(version));
    PrecomputedFeatures features;
    features.n = static_cast<Index>(read_u64(in, path));
    features.d = static_cast<Index>(read_u64(in, path));
    features.source_layers = static_cast<int>(read_u64(in, path));
    features.dataset_hash = read_u64(in, path);
    const auto count = read_u64(in, path);
    std::vector<int> powers;
    powers.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        powers.push_back(static_cast<int>(read_u64(in, path)));
    for (int power : powers) {
        DenseMatrix matrix(features.n, features.d);
        if (!in.read(reinterpret_cast<char*>(matrix.values.data()),
                     static_cast<std::streamsize>(matrix.values.size() * sizeof(double))))
            throw IoError(path + ": truncated payload for power " + std::to_string(power));
        features.per_power.emplace(power, std::move(matrix));
    }
    return features;
}

void write_manifest(const std::string& path, const std::map<std::string, std::string>& fields) {
    auto out = open_out(path);
    for (const auto& [key, value] : fields) out << key << " = " << value << "\n";
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    auto in = open_in(path);
    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return fields;
}

}  // namespace lcgnn::io
