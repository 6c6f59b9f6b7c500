#include "nalpha/common/csv.hpp"

#include <charconv>
#include <cmath>

#include "nalpha/common/error.hpp"

namespace nalpha::csv {

namespace {

std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

bool skippable(std::string_view s) { return s.empty() || s.front() == '#'; }

}  // namespace

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

Reader::Reader(const std::filesystem::path& path) : in_(path), file_(path.string()) {
    if (!in_) throw InputError("cannot open " + file_);
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        std::string_view v = trim_cr(line);
        if (skippable(v)) continue;
        for (auto f : split(v)) header_.emplace_back(f);
        return;
    }
    throw InputError(file_, line_, "missing header");
}

std::optional<std::size_t> Reader::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Reader::require(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw InputError(file_, 1, "missing column '" + std::string(name) + "'");
}

void Reader::expect_prefix(const std::vector<std::string_view>& names) const {
    if (header_.size() < names.size()) {
        throw InputError(file_, 1, "header has " + std::to_string(header_.size()) +
                                       " columns, expected at least " + std::to_string(names.size()));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (header_[i] != names[i]) {
            throw InputError(file_, 1, "column " + std::to_string(i + 1) + " is '" + header_[i] +
                                           "', expected '" + std::string(names[i]) + "'");
        }
    }
}

bool Reader::next() {
    while (std::getline(in_, row_)) {
        ++line_;
        std::string_view v = trim_cr(row_);
        if (skippable(v)) continue;
        fields_ = split(v);
        if (fields_.size() != header_.size()) {
            fail("expected " + std::to_string(header_.size()) + " fields, found " +
                 std::to_string(fields_.size()));
        }
        return true;
    }
    return false;
}

std::string_view Reader::field(std::size_t i) const { return fields_.at(i); }

void Reader::fail(const std::string& what) const { throw InputError(file_, line_, what); }

std::optional<double> Reader::optional_number(std::size_t i) const {
    std::string_view s = field(i);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        fail("column '" + header_[i] + "': not a finite number: '" + std::string(s) + "'");
    }
    return v;
}

double Reader::number(std::size_t i) const {
    auto v = optional_number(i);
    if (!v) fail("column '" + header_[i] + "' must not be empty");
    return *v;
}

std::optional<long long> Reader::optional_integer(std::size_t i) const {
    std::string_view s = field(i);
    if (s.empty()) return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail("column '" + header_[i] + "': not an integer: '" + std::string(s) + "'");
    }
    return v;
}

long long Reader::integer(std::size_t i) const {
    auto v = optional_integer(i);
    if (!v) fail("column '" + header_[i] + "' must not be empty");
    return *v;
}

std::string format(double value) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

std::string format(std::optional<double> value) { return value ? format(*value) : std::string{}; }

}  // namespace nalpha::csv
