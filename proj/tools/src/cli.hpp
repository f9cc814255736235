#pragma once

#include <iostream>

namespace ctc {

// Batch front end over the corpus/model/training modules. Exit codes:
//   0 success, 1 usage error, 2 data error, 3 numeric divergence.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

inline int run_cli(int argc, const char* const* argv) {
    return run_cli(argc, argv, std::cout, std::cerr);
}

}  // namespace ctc
