#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nalpha/ingest/embeddings.hpp"

namespace nalpha::attribution {

/// Bitmask over the players of a partition (bit p = player p included).
using Coalition = std::uint64_t;

inline constexpr int kBackground = -1;

/// Assignment of embedding groups to Shapley players. Groups mapped to
/// kBackground are part of every coalition.
struct Partition {
    std::string name;
    std::vector<std::string> players;
    std::vector<int> group_player;  ///< per embedding group: player index or kBackground

    [[nodiscard]] std::size_t size() const { return players.size(); }
    [[nodiscard]] Coalition full() const { return players.size() >= 64 ? ~Coalition{0} : (Coalition{1} << players.size()) - 1; }
    /// Whether embedding group g contributes under coalition S.
    [[nodiscard]] bool includes(std::size_t g, Coalition S) const {
        const int p = group_player[g];
        return p == kBackground || ((S >> p) & 1U) != 0;
    }
};

/// The seventeen section topics, in canonical order.
const std::vector<std::string>& topic_names();
/// The five meta-categories, in canonical order.
const std::vector<std::string>& meta_category_names();
/// Meta-category of a topic, a meta-category name, or a Strategic Outlook
/// split label (SO/...).
std::optional<std::string> meta_category_of(std::string_view group);

/// Components of a Strategic Outlook split label
/// SO/<Long-term|Short-term|Both>/<Negative|Neutral|Positive>/<Risk|Fundamental>.
struct SoLabel {
    std::string timeframe;
    std::string sentiment;
    std::string focus;
};
std::optional<SoLabel> parse_so_label(std::string_view group);

/// Builds a partition over the embedding groups. Specs:
///   groups        every embedding group is its own player
///   topic17       groups must be section topics
///   meta5         groups mapped to their meta-category
///   so-timeframe, so-sentiment, so-focus
///                 SO/... groups split by one label dimension; all other
///                 groups form the background
///   file:<path>   CSV with columns group,player ("*" = background)
/// Throws InputError for unknown specs or unmapped groups.
Partition make_partition(std::string_view spec, const std::vector<std::string>& groups);

/// Player -> category mapping used to aggregate Shapley values (meta5 for
/// topic players, identity for meta-category names).
std::map<std::string, std::string> meta_mapping(const std::vector<std::string>& players);

/// sum of w_g * block_g over groups included in S; excluded groups add the
/// zero vector and weights are not renormalized.
Eigen::VectorXd coalition_embedding(const ingest::TopicBlockEmbedding& report, const Partition& partition,
                                    Coalition S);
Eigen::VectorXd coalition_embedding(const ingest::EmbeddingTable& table, std::size_t row,
                                    const Partition& partition, Coalition S);

}  // namespace nalpha::attribution
