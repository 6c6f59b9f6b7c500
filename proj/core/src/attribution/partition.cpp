#include "nalpha/attribution/partition.hpp"

#include <algorithm>
#include <array>

#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"

namespace nalpha::attribution {

namespace {

constexpr std::string_view kCio = "Company and Industry Overview";
constexpr std::string_view kFa = "Financial Analysis";
constexpr std::string_view kSo = "Strategic Outlook";
constexpr std::string_view kRg = "Risk and Governance";
constexpr std::string_view kAc = "Additional Content";

struct TopicMeta {
    std::string_view topic;
    std::string_view meta;
};

constexpr std::array<TopicMeta, 17> kTopics = {{
    {"Executive Summary", kCio},
    {"Company Overview", kCio},
    {"Industry Analysis", kCio},
    {"Competitive Landscape", kCio},
    {"Income Statement Analysis", kFa},
    {"Balance Sheet Analysis", kFa},
    {"Cash Flow Analysis", kFa},
    {"Financial Ratios", kFa},
    {"Business Segments", kCio},
    {"Growth Strategies", kCio},
    {"Risk Factors", kRg},
    {"Management and Governance", kRg},
    {"ESG Factors", kRg},
    {"Valuation", kSo},
    {"Investment Thesis", kSo},
    {"Appendices and Disclosures", kAc},
    {"None of the Above", kAc},
}};

const std::array<std::string_view, 3> kTimeframes = {"Long-term", "Short-term", "Both"};
const std::array<std::string_view, 3> kSentiments = {"Negative", "Neutral", "Positive"};
const std::array<std::string_view, 2> kFocus = {"Risk", "Fundamental"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& options, std::string_view v) {
    return std::find(options.begin(), options.end(), v) != options.end();
}

// Players from an ordered candidate list, keeping the ones some group uses.
template <class Range>
Partition ordered_partition(std::string name, const Range& order, const std::vector<std::string>& labels) {
    Partition p;
    p.name = std::move(name);
    for (const auto& c : order) {
        if (std::find(labels.begin(), labels.end(), std::string(c)) != labels.end()) p.players.emplace_back(c);
    }
    p.group_player.reserve(labels.size());
    for (const auto& l : labels) {
        if (l.empty()) {
            p.group_player.push_back(kBackground);
            continue;
        }
        auto it = std::find(p.players.begin(), p.players.end(), l);
        p.group_player.push_back(static_cast<int>(it - p.players.begin()));
    }
    return p;
}

Partition from_file(const std::filesystem::path& path, const std::vector<std::string>& groups) {
    csv::Reader in(path);
    const std::size_t cg = in.require("group");
    const std::size_t cp = in.require("player");
    std::map<std::string, std::string> assign;
    while (in.next()) {
        std::string g(in.field(cg));
        if (!assign.emplace(g, std::string(in.field(cp))).second) in.fail("group '" + g + "' listed twice");
    }
    Partition p;
    p.name = "file:" + path.string();
    for (const auto& g : groups) {
        auto it = assign.find(g);
        if (it == assign.end()) throw InputError(path.string() + ": embedding group '" + g + "' is not mapped");
        if (it->second == "*") {
            p.group_player.push_back(kBackground);
            continue;
        }
        auto pos = std::find(p.players.begin(), p.players.end(), it->second);
        if (pos == p.players.end()) {
            p.players.push_back(it->second);
            pos = p.players.end() - 1;
        }
        p.group_player.push_back(static_cast<int>(pos - p.players.begin()));
    }
    return p;
}

}  // namespace

const std::vector<std::string>& topic_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& t : kTopics) v.emplace_back(t.topic);
        return v;
    }();
    return names;
}

const std::vector<std::string>& meta_category_names() {
    static const std::vector<std::string> names = {std::string(kCio), std::string(kFa), std::string(kSo),
                                                   std::string(kRg), std::string(kAc)};
    return names;
}

std::optional<std::string> meta_category_of(std::string_view group) {
    for (const auto& t : kTopics) {
        if (t.topic == group) return std::string(t.meta);
    }
    for (const auto& m : meta_category_names()) {
        if (m == group) return m;
    }
    if (parse_so_label(group)) return std::string(kSo);
    return std::nullopt;
}

std::optional<SoLabel> parse_so_label(std::string_view group) {
    const auto parts = csv::split(group, '/');
    if (parts.size() != 4 || parts[0] != "SO") return std::nullopt;
    if (!one_of(kTimeframes, parts[1]) || !one_of(kSentiments, parts[2]) || !one_of(kFocus, parts[3])) {
        return std::nullopt;
    }
    return SoLabel{std::string(parts[1]), std::string(parts[2]), std::string(parts[3])};
}

Partition make_partition(std::string_view spec, const std::vector<std::string>& groups) {
    if (groups.empty()) throw InputError("embedding table has no groups");
    if (spec.starts_with("file:")) return from_file(std::filesystem::path(std::string(spec.substr(5))), groups);

    Partition p;
    if (spec == "groups") {
        p = ordered_partition("groups", groups, groups);
    } else if (spec == "topic17") {
        for (const auto& g : groups) {
            const auto& t = topic_names();
            if (std::find(t.begin(), t.end(), g) == t.end()) {
                throw InputError("partition topic17: group '" + g + "' is not a section topic");
            }
        }
        p = ordered_partition("topic17", topic_names(), groups);
    } else if (spec == "meta5") {
        std::vector<std::string> labels;
        for (const auto& g : groups) {
            auto m = meta_category_of(g);
            if (!m) throw InputError("partition meta5: group '" + g + "' has no meta-category");
            labels.push_back(*m);
        }
        p = ordered_partition("meta5", meta_category_names(), labels);
    } else if (spec == "so-timeframe" || spec == "so-sentiment" || spec == "so-focus") {
        std::vector<std::string> labels;
        bool any = false;
        for (const auto& g : groups) {
            auto so = parse_so_label(g);
            if (!so) {
                labels.emplace_back();
                continue;
            }
            any = true;
            labels.push_back(spec == "so-timeframe" ? so->timeframe : spec == "so-sentiment" ? so->sentiment : so->focus);
        }
        if (!any) throw InputError("partition " + std::string(spec) + ": embedding table has no SO/... groups");
        if (spec == "so-timeframe") p = ordered_partition(std::string(spec), kTimeframes, labels);
        else if (spec == "so-sentiment") p = ordered_partition(std::string(spec), kSentiments, labels);
        else p = ordered_partition(std::string(spec), kFocus, labels);
    } else {
        throw InputError("unknown partition '" + std::string(spec) + "'");
    }
    if (p.players.empty()) throw InputError("partition '" + std::string(spec) + "' has no players");
    return p;
}

std::map<std::string, std::string> meta_mapping(const std::vector<std::string>& players) {
    std::map<std::string, std::string> out;
    for (const auto& p : players) {
        auto m = meta_category_of(p);
        if (!m) throw InputError("player '" + p + "' has no meta-category");
        out.emplace(p, *m);
    }
    return out;
}

Eigen::VectorXd coalition_embedding(const ingest::TopicBlockEmbedding& report, const Partition& partition,
                                    Coalition S) {
    const auto G = static_cast<std::size_t>(report.blocks.rows());
    if (G != partition.group_player.size()) throw DomainError("report groups do not match the partition");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(report.blocks.cols());
    for (std::size_t g = 0; g < G; ++g) {
        if (partition.includes(g, S)) out += report.weights(static_cast<Eigen::Index>(g)) *
                                             report.blocks.row(static_cast<Eigen::Index>(g)).transpose();
    }
    return out;
}

Eigen::VectorXd coalition_embedding(const ingest::EmbeddingTable& table, std::size_t row,
                                    const Partition& partition, Coalition S) {
    if (table.group_count() != partition.group_player.size()) {
        throw DomainError("embedding groups do not match the partition");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dim()));
    for (std::size_t g = 0; g < table.group_count(); ++g) {
        if (!partition.includes(g, S)) continue;
        const double w = table.weight(row, g);
        const auto b = table.block(row, g);
        for (std::size_t j = 0; j < b.size(); ++j) out(static_cast<Eigen::Index>(j)) += w * static_cast<double>(b[j]);
    }
    return out;
}

}  // namespace nalpha::attribution
