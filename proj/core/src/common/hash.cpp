#include "nalpha/common/hash.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "nalpha/common/error.hpp"

namespace nalpha {

std::string Fnv1a::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string hash_string(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.hex();
}

}  // namespace nalpha
