#pragma once

#include <string>
#include <string_view>

namespace occrelax {

/// %.17g; round-trips every finite double.
[[nodiscard]] std::string formatDouble(double v);
/// Strict decimal parse (whole string, surrounding blanks allowed).
[[nodiscard]] double parseDouble(std::string_view text);

/// Writes through a temporary file in the same directory and renames it.
void writeFileAtomic(const std::string& path, const std::string& contents);
[[nodiscard]] std::string readFile(const std::string& path);

}  // namespace occrelax
