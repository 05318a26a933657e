#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dpme/types.hpp"

namespace dpme::cli {

/// Process exit codes of dpme_cli.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,  // invariant failure, or a validation suite that did not pass
  kUsageError = 2,
  kDataError = 3,
};

/// Runs the command line (without the program name). Output files are
/// written where the flags say; human-readable text goes to `out`,
/// diagnostics and usage to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses comma-separated numeric rows. Errors name the 1-based line and
/// column of the offending cell.
Dataset parse_csv(std::string_view text, bool has_header);
Dataset load_csv(const std::filesystem::path& path, bool has_header);

std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// "%.17g" rendering used for CSV output.
std::string format_double(double value);

}  // namespace dpme::cli
