#include "nalpha/ingest/records.hpp"

#include <algorithm>
#include <tuple>

namespace nalpha::ingest {

namespace {
std::string pair_key(const std::string& analyst, const std::string& firm) { return analyst + '\x1f' + firm; }
}  // namespace

NumericRevisionHistory::NumericRevisionHistory(std::vector<NumericRecord> records) : records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(), [](const NumericRecord& a, const NumericRecord& b) {
        return std::tie(a.analyst_id, a.firm_id, a.date) < std::tie(b.analyst_id, b.firm_id, b.date);
    });
    std::size_t i = 0;
    while (i < records_.size()) {
        std::size_t j = i;
        while (j < records_.size() && records_[j].analyst_id == records_[i].analyst_id &&
               records_[j].firm_id == records_[i].firm_id) {
            firms_[records_[j].firm_id].push_back(j);
            ++j;
        }
        pairs_.emplace(pair_key(records_[i].analyst_id, records_[i].firm_id), std::make_pair(i, j));
        i = j;
    }
}

std::span<const NumericRecord> NumericRevisionHistory::for_pair(const std::string& analyst,
                                                                const std::string& firm) const {
    auto it = pairs_.find(pair_key(analyst, firm));
    if (it == pairs_.end()) return {};
    return std::span<const NumericRecord>(records_).subspan(it->second.first, it->second.second - it->second.first);
}

std::vector<const NumericRecord*> NumericRevisionHistory::for_firm(const std::string& firm) const {
    std::vector<const NumericRecord*> out;
    auto it = firms_.find(firm);
    if (it == firms_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(&records_[i]);
    return out;
}

}  // namespace nalpha::ingest
