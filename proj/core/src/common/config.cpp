#include "nalpha/common/config.hpp"

#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "nalpha/common/error.hpp"

namespace nalpha {

nlohmann::json parse_toml(std::string_view text, const std::string& source) {
    try {
        toml::table table = toml::parse(text, source);
        std::ostringstream os;
        os << toml::json_formatter{table};
        return nlohmann::json::parse(os.str());
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        throw InputError(os.str());
    }
}

nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return nlohmann::json::parse(ss.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(path.string() + ": " + e.what());
        }
    }
    return parse_toml(ss.str(), path.string());
}

}  // namespace nalpha
