#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nalpha::ingest {

/// Per-report topic blocks: token weights w_p and block vectors, with the
/// report embedding reconstructed as sum_p w_p * block_p.
struct TopicBlockEmbedding {
    std::string report_id;
    std::vector<std::string> groups;
    Eigen::VectorXd weights;  ///< one per group
    Eigen::MatrixXd blocks;   ///< groups x dim

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(blocks.cols()); }
    [[nodiscard]] Eigen::VectorXd full_vector() const { return blocks.transpose() * weights; }
};

/// Column store for all blocks of a corpus: weights are f64 and block
/// coordinates f32, matching embeddings.bin.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::vector<std::string> groups);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t group_count() const { return groups_.size(); }
    [[nodiscard]] std::size_t size() const { return ids_.size(); }
    [[nodiscard]] const std::vector<std::string>& groups() const { return groups_; }
    [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
    [[nodiscard]] const std::string& id(std::size_t i) const { return ids_[i]; }

    [[nodiscard]] double weight(std::size_t i, std::size_t g) const { return weights_[i * groups_.size() + g]; }
    [[nodiscard]] std::span<const float> block(std::size_t i, std::size_t g) const {
        return {blocks_.data() + (i * groups_.size() + g) * dim_, dim_};
    }

    /// Appends a report; `weights` has group_count() entries and `blocks`
    /// is group-major with group_count()*dim() coordinates.
    void append(std::string id, std::span<const double> weights, std::span<const float> blocks);

    /// sum_g w_g * block_g in double precision.
    [[nodiscard]] Eigen::VectorXd full_vector(std::size_t i) const;
    [[nodiscard]] TopicBlockEmbedding report(std::size_t i) const;
    /// Max |full - sum_g w_g block_g| over coordinates, recomputing the
    /// block sum in ascending group order from the f32 coordinates.
    [[nodiscard]] double reconstruction_error(std::size_t i) const;
    /// |sum_g w_g - 1| over the report's groups.
    [[nodiscard]] double weight_sum_error(std::size_t i) const;

    /// New table holding rows `order` (indices into this table) in that order.
    [[nodiscard]] EmbeddingTable select(std::span<const std::size_t> order) const;
    [[nodiscard]] bool operator==(const EmbeddingTable& other) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> groups_;
    std::vector<std::string> ids_;
    std::vector<double> weights_;
    std::vector<float> blocks_;
};

/// embeddings.bin: magic "NAEM", u32 version (1), u32 dim, u32 group count,
/// length-prefixed (u32) UTF-8 group labels, then per report a
/// length-prefixed id followed by G x (f64 weight, dim x f32). All values
/// little-endian.
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
/// Throws InputError on bad magic/version, truncation, dimension
/// inconsistency or duplicate report ids.
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace nalpha::ingest
