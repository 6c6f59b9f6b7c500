#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

namespace nalpha {

/// Reads a TOML (default) or JSON (.json extension) configuration file into a
/// JSON document. Throws InputError on parse failure.
nlohmann::json read_config_file(const std::filesystem::path& path);
nlohmann::json parse_toml(std::string_view text, const std::string& source = "<string>");

}  // namespace nalpha
