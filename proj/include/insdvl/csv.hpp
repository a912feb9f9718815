#pragma once

#include <string>
#include <vector>

namespace insdvl {

/// Shortest round-trippable decimal form of x ("%.17g" fallback), locale
/// independent. All file and stdout output funnels through this so that
/// reruns with the same seed are byte-identical.
std::string fmt_num(double x);

/// Joins cells with commas and appends '\n'. Cells are written verbatim;
/// callers must not pass cells containing commas or newlines.
std::string csv_row(const std::vector<std::string>& cells);

/// Writes content to path atomically enough for our purposes (truncate +
/// write). Throws IoError on failure.
void write_text_file(const std::string& path, const std::string& content);

/// Reads a whole file. Throws IoError if unreadable.
std::string read_text_file(const std::string& path);

}  // namespace insdvl
