#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nnmass {

// Exit codes: 0 success, 1 domain error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes to a sibling temp file, then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace nnmass
