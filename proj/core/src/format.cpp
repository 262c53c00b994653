#include "dtsn/format.hpp"

#include <cctype>
#include <charconv>

namespace dtsn {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string canonical_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_gap = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_gap = true;
            continue;
        }
        if (in_gap && !out.empty()) out.push_back(' ');
        in_gap = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::vector<std::string> split_tokens(std::string_view text) {
    std::string canon = canonical_text(text);
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < canon.size()) {
        std::size_t end = canon.find(' ', start);
        if (end == std::string::npos) end = canon.size();
        tokens.emplace_back(canon.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += fields[i];
    }
    out.push_back('\n');
    return out;
}

} // namespace dtsn
