#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace semtrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// args excludes the program name. Results go to `out`, JSON-lines logs and
// error messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semtrack::cli
