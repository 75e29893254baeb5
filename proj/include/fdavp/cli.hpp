#pragma once

#include <string>
#include <vector>

namespace fdavp {

// fdavp simulate|estimate|infer|regularity|bench --config <file> --out <path>
//       [--threads N] [--seed S]
// exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O
int run_cli(const std::vector<std::string>& args);

}  // namespace fdavp
