#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fimscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

inline constexpr int kFormatVersion = 1;

// Runs one subcommand. `args` excludes the program name. Never throws.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::vector<std::string> subcommand_names();

// Flat "key = value" lines; blank lines and lines starting with '#' are
// skipped. Throws ParseError naming the line.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

std::size_t edit_distance(std::string_view a, std::string_view b);
// Closest candidate within a small edit distance, if any.
std::optional<std::string> closest_match(std::string_view word, std::span<const std::string> candidates);

}  // namespace fimscore::cli
