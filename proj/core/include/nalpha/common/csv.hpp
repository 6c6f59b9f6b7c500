#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nalpha::csv {

/// Line-oriented reader for the comma-separated inputs. Fields are not
/// quoted; blank lines and lines starting with '#' are skipped.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
    /// Column position, or nullopt when the header lacks it.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
    /// Column position; throws InputError naming the file when absent.
    [[nodiscard]] std::size_t require(std::string_view name) const;
    /// Throws unless the header starts with exactly these columns in order.
    void expect_prefix(const std::vector<std::string_view>& names) const;

    /// Advances to the next data row; false at end of file.
    bool next();
    [[nodiscard]] std::string_view field(std::size_t i) const;
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] const std::string& file() const { return file_; }

    [[nodiscard]] double number(std::size_t i) const;
    [[nodiscard]] std::optional<double> optional_number(std::size_t i) const;
    [[nodiscard]] long long integer(std::size_t i) const;
    [[nodiscard]] std::optional<long long> optional_integer(std::size_t i) const;

    /// Throws InputError tagged with file and current line.
    [[noreturn]] void fail(const std::string& what) const;

private:
    std::ifstream in_;
    std::string file_;
    std::vector<std::string> header_;
    std::string row_;
    std::vector<std::string_view> fields_;
    std::size_t line_ = 0;
};

/// Shortest round-trip decimal representation.
std::string format(double value);
std::string format(std::optional<double> value);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

}  // namespace nalpha::csv
