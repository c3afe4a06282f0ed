#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qfs {

/// FNV-1a, 64-bit. Used for fingerprints and cache keys, never for security.
class Fnv1a {
public:
    void update(std::string_view bytes) noexcept;
    void update(std::span<const std::byte> bytes) noexcept;
    void update_u64(std::uint64_t v) noexcept;
    void update_double(double v) noexcept;
    std::uint64_t digest() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Splits delimited text into records. Handles double-quoted fields, doubled
/// quotes, CRLF line ends; blank lines are skipped. Throws std::runtime_error on
/// an unterminated quote.
std::vector<std::vector<std::string>> split_csv_records(std::string_view text, char delimiter);

/// Quotes a field if it contains the delimiter, a quote or a line break.
std::string csv_escape(std::string_view field, char delimiter = ',');

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace qfs
