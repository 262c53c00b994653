#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dtsn {

// Shortest decimal string that round-trips the value. Used for every
// number written to CSV/SVG output so reruns are byte-identical.
std::string format_double(double value);

// Lowercased, whitespace-collapsed copy: "  Smart  HOME " -> "smart home".
std::string canonical_text(std::string_view text);

// canonical_text split at single spaces.
std::vector<std::string> split_tokens(std::string_view text);

// 64-bit FNV-1a, rendered as 16 hex digits. Stable content digest for
// transcripts; not a cryptographic hash.
std::string fnv1a_hex(std::string_view data);

// Joins fields with commas and appends '\n'. Fields must not contain
// commas, quotes or newlines; all producers in this library guarantee that.
std::string csv_line(const std::vector<std::string>& fields);

} // namespace dtsn
