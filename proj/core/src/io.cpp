#include "camera/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "camera/errors.hpp"

namespace camera {

namespace {

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (x >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (x >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u32(std::istream& is, std::uint32_t& x) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(b[i]) << (8 * i);
    return true;
}

bool get_u64(std::istream& is, std::uint64_t& x) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(b[i]) << (8 * i);
    return true;
}

float f32_from_le(const unsigned char* b) {
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= std::uint32_t(b[i]) << (8 * i);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

void f32_to_le(float f, unsigned char* b) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) b[i] = (u >> (8 * i)) & 0xff;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(path, mode);
    if (!f) throw DataError("cannot open file: " + path.string());
    return f;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f) throw DataError("cannot open file for writing: " + path.string());
    return f;
}

}  // namespace

FeatureMatrix read_embeddings(const std::filesystem::path& path) {
    std::ifstream f = open_in(path, std::ios::binary);

    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kEmbeddingMagic, 8) != 0)
        throw DataError("embedding file " + path.string() + ": bad magic");
    std::uint32_t version = 0;
    if (!get_u32(f, version)) throw DataError("embedding file " + path.string() + ": truncated header");
    if (version != kEmbeddingVersion)
        throw DataError("embedding file " + path.string() + ": unsupported version " +
                        std::to_string(version));
    std::uint64_t rows = 0, dim = 0;
    if (!get_u64(f, rows) || !get_u64(f, dim))
        throw DataError("embedding file " + path.string() + ": truncated header");
    char dtype = 0;
    if (!f.read(&dtype, 1)) throw DataError("embedding file " + path.string() + ": truncated header");
    if (dtype != 0) throw DataError("embedding file " + path.string() + ": unsupported dtype");

    FeatureMatrix m(rows, dim);
    std::vector<unsigned char> buf(m.values.size() * 4);
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    const std::size_t got = std::size_t(f.gcount());
    if (got < buf.size()) {
        const std::size_t whole_floats = got / 4;
        const std::size_t bad_row = dim == 0 ? 0 : whole_floats / dim;
        throw DataError("embedding file " + path.string() + ": truncated payload at row " +
                        std::to_string(bad_row));
    }
    if (f.peek() != std::ifstream::traits_type::eof())
        throw DataError("embedding file " + path.string() + ": trailing bytes after payload");

    for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values[i] = f32_from_le(buf.data() + 4 * i);
        if (!std::isfinite(m.values[i]))
            throw DataError("embedding file " + path.string() + ": non-finite value at row " +
                            std::to_string(dim == 0 ? 0 : i / dim));
    }
    return m;
}

void write_embeddings(const FeatureMatrix& m, const std::filesystem::path& path) {
    if (m.values.size() != m.num_rows * m.dim)
        throw DataError("write_embeddings: buffer length mismatch");
    std::ofstream f = open_out(path, std::ios::binary);
    f.write(kEmbeddingMagic, 8);
    put_u32(f, kEmbeddingVersion);
    put_u64(f, m.num_rows);
    put_u64(f, m.dim);
    char dtype = 0;
    f.write(&dtype, 1);
    std::vector<unsigned char> buf(m.values.size() * 4);
    for (std::size_t i = 0; i < m.values.size(); ++i) f32_to_le(m.values[i], buf.data() + 4 * i);
    f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!f) throw DataError("write_embeddings: I/O failure on " + path.string());
}

EdgeList read_edge_list(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    EdgeList edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        long long u = -1, v = -1;
        if (!(ss >> u >> v) || u < 0 || v < 0)
            throw DataError("edge list " + path.string() + ": malformed line " + std::to_string(lineno));
        edges.emplace_back(NodeId(u), NodeId(v));
    }
    return edges;
}

void write_edge_list(const EdgeList& edges, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    for (const auto& [u, v] : edges) f << u << ' ' << v << '\n';
    if (!f) throw DataError("write_edge_list: I/O failure on " + path.string());
}

LabelVector read_labels(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    LabelVector lv;
    lv.present = true;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int y = -1;
        if (!(ss >> y) || (y != 0 && y != 1))
            throw DataError("label file " + path.string() + ": expected 0/1 at line " +
                            std::to_string(lineno));
        lv.labels.push_back(std::uint8_t(y));
    }
    return lv;
}

void write_labels(const LabelVector& labels, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    for (auto y : labels.labels) f << int(y) << '\n';
    if (!f) throw DataError("write_labels: I/O failure on " + path.string());
}

std::vector<double> read_scores(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    std::vector<double> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        try {
            scores.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw DataError("scores file " + path.string() + ": malformed line " + std::to_string(lineno));
        }
    }
    return scores;
}

void write_scores(const std::vector<double>& scores, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    char buf[64];
    for (double s : scores) {
        std::snprintf(buf, sizeof buf, "%.17g", s);
        f << buf << '\n';
    }
    if (!f) throw DataError("write_scores: I/O failure on " + path.string());
}

std::vector<TextRecord> read_jsonl_texts(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    std::vector<TextRecord> records;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::uint64_t> seen;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("jsonl " + path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("node_id") || !j["node_id"].is_number_integer() ||
            !j.contains("text") || !j["text"].is_string())
            throw DataError("jsonl " + path.string() + " line " + std::to_string(lineno) +
                            ": expected {\"node_id\": int, \"text\": str}");
        TextRecord r;
        r.node_id = j["node_id"].get<std::uint64_t>();
        r.text = j["text"].get<std::string>();
        seen.push_back(r.node_id);
        records.push_back(std::move(r));
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw DataError("jsonl " + path.string() + ": duplicate node_id");
    return records;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    const auto edges_path = dir / "edges.txt";
    const auto emb_path = dir / "embeddings.bin";
    if (!std::filesystem::exists(emb_path))
        throw DataError("missing embeddings file: " + emb_path.string());
    if (!std::filesystem::exists(edges_path))
        throw DataError("missing edge list: " + edges_path.string());
    ds.features = read_embeddings(emb_path);
    ds.graph = build_graph(read_edge_list(edges_path), ds.features.num_rows);
    const auto labels_path = dir / "labels.txt";
    if (std::filesystem::exists(labels_path)) ds.labels = read_labels(labels_path);
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_edge_list(edge_dump(ds.graph), dir / "edges.txt");
    write_embeddings(ds.features, dir / "embeddings.bin");
    if (ds.labels.present) write_labels(ds.labels, dir / "labels.txt");
}

}  // namespace camera
