#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules. ASCII-only case folding;
// bytes >= 0x80 pass through untouched so UTF-8 text survives.
namespace storygen::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Whitespace-delimited tokens.
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

/// Lower-cased, punctuation stripped, whitespace collapsed to single spaces.
std::string normalize_for_compare(std::string_view s);

/// Splits on lines; a trailing '\r' is removed from each line.
std::vector<std::string> split_lines(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a. Stable across platforms; used for seed derivation and the
/// hashing embedding provider, not for anything security-relevant.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace storygen::text
