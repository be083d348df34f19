#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oscring::cli {

/// Run the toolkit on argv-style arguments (args[0] = program name).
/// Streams are injectable so tests can capture output. Exit codes: 0 on
/// success, 2 on configuration errors, 3 on numerical failures; errors also
/// produce one machine-readable JSON line on `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv convenience overload writing to std::cout / std::cerr.
int dispatch(int argc, const char* const* argv);

} // namespace oscring::cli
