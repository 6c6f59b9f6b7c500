#include "nalpha/ingest/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "nalpha/common/error.hpp"

namespace nalpha::ingest {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw InputError("cannot write " + path.string());
    }
    template <class T>
    void put(T v) {
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void put_string(const std::string& s) {
        put(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

private:
    std::ofstream out_;
};

class Cursor {
public:
    Cursor(std::vector<char> bytes, std::string file) : bytes_(std::move(bytes)), file_(std::move(file)) {}

    [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    void fail(const std::string& what) const {
        throw InputError(file_ + ": byte " + std::to_string(pos_) + ": " + what);
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) fail("truncated embeddings file");
    }
    std::vector<char> bytes_;
    std::string file_;
    std::size_t pos_ = 0;
};

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> groups)
    : dim_(dim), groups_(std::move(groups)) {
    if (dim_ == 0) throw InputError("embedding dimension must be positive");
    if (groups_.empty()) throw InputError("embedding table needs at least one group");
}

void EmbeddingTable::append(std::string id, std::span<const double> weights, std::span<const float> blocks) {
    if (weights.size() != groups_.size() || blocks.size() != groups_.size() * dim_) {
        throw InputError("embedding for '" + id + "' has inconsistent dimensions");
    }
    ids_.push_back(std::move(id));
    weights_.insert(weights_.end(), weights.begin(), weights.end());
    blocks_.insert(blocks_.end(), blocks.begin(), blocks.end());
}

Eigen::VectorXd EmbeddingTable::full_vector(std::size_t i) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        const double w = weight(i, g);
        if (w == 0.0) continue;
        auto b = block(i, g);
        for (std::size_t d = 0; d < dim_; ++d) v[static_cast<Eigen::Index>(d)] += w * static_cast<double>(b[d]);
    }
    return v;
}

TopicBlockEmbedding EmbeddingTable::report(std::size_t i) const {
    TopicBlockEmbedding e;
    e.report_id = ids_[i];
    e.groups = groups_;
    const auto G = static_cast<Eigen::Index>(groups_.size());
    const auto D = static_cast<Eigen::Index>(dim_);
    e.weights.resize(G);
    e.blocks.resize(G, D);
    for (Eigen::Index g = 0; g < G; ++g) {
        e.weights[g] = weight(i, static_cast<std::size_t>(g));
        auto b = block(i, static_cast<std::size_t>(g));
        for (Eigen::Index d = 0; d < D; ++d) e.blocks(g, d) = b[static_cast<std::size_t>(d)];
    }
    return e;
}

double EmbeddingTable::reconstruction_error(std::size_t i) const {
    const Eigen::VectorXd full = full_vector(i);
    const Eigen::VectorXd dense = report(i).full_vector();
    return (full - dense).cwiseAbs().maxCoeff();
}

double EmbeddingTable::weight_sum_error(std::size_t i) const {
    double s = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) s += weight(i, g);
    return std::abs(s - 1.0);
}

EmbeddingTable EmbeddingTable::select(std::span<const std::size_t> order) const {
    EmbeddingTable out(dim_, groups_);
    const std::size_t G = groups_.size();
    out.ids_.reserve(order.size());
    out.weights_.reserve(order.size() * G);
    out.blocks_.reserve(order.size() * G * dim_);
    for (std::size_t i : order) {
        out.ids_.push_back(ids_[i]);
        out.weights_.insert(out.weights_.end(), weights_.begin() + static_cast<std::ptrdiff_t>(i * G),
                            weights_.begin() + static_cast<std::ptrdiff_t>((i + 1) * G));
        out.blocks_.insert(out.blocks_.end(), blocks_.begin() + static_cast<std::ptrdiff_t>(i * G * dim_),
                           blocks_.begin() + static_cast<std::ptrdiff_t>((i + 1) * G * dim_));
    }
    return out;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
    Writer w(path);
    w.raw(kMagic, 4);
    w.put(kVersion);
    w.put(static_cast<std::uint32_t>(table.dim()));
    w.put(static_cast<std::uint32_t>(table.group_count()));
    for (const auto& g : table.groups()) w.put_string(g);
    for (std::size_t i = 0; i < table.size(); ++i) {
        w.put_string(table.id(i));
        for (std::size_t g = 0; g < table.group_count(); ++g) {
            w.put(table.weight(i, g));
            for (float x : table.block(i, g)) w.put(x);
        }
    }
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Cursor c(std::move(bytes), path.string());

    char magic[4];
    for (char& m : magic) m = c.get<char>();
    if (std::memcmp(magic, kMagic, 4) != 0) c.fail("bad magic (expected NAEM)");
    const auto version = c.get<std::uint32_t>();
    if (version != kVersion) c.fail("unsupported version " + std::to_string(version));
    const auto dim = c.get<std::uint32_t>();
    const auto G = c.get<std::uint32_t>();
    if (dim == 0) c.fail("embedding dimension must be positive");
    if (G == 0) c.fail("group count must be positive");
    std::vector<std::string> groups;
    std::unordered_set<std::string> seen_groups;
    for (std::uint32_t g = 0; g < G; ++g) {
        groups.push_back(c.get_string());
        if (!seen_groups.insert(groups.back()).second) c.fail("duplicate group label '" + groups.back() + "'");
    }

    EmbeddingTable table(dim, groups);
    std::unordered_set<std::string> seen;
    std::vector<double> weights(G);
    std::vector<float> blocks(static_cast<std::size_t>(G) * dim);
    while (!c.at_end()) {
        std::string id = c.get_string();
        if (!seen.insert(id).second) c.fail("duplicate report_id '" + id + "'");
        for (std::uint32_t g = 0; g < G; ++g) {
            weights[g] = c.get<double>();
            if (!std::isfinite(weights[g]) || weights[g] < 0.0 || weights[g] > 1.0) {
                c.fail("report '" + id + "': block weight outside [0,1]");
            }
            for (std::uint32_t d = 0; d < dim; ++d) {
                const float x = c.get<float>();
                if (!std::isfinite(x)) c.fail("report '" + id + "': non-finite coordinate");
                blocks[static_cast<std::size_t>(g) * dim + d] = x;
            }
        }
        table.append(std::move(id), weights, blocks);
    }
    return table;
}

}  // namespace nalpha::ingest
