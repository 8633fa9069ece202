#pragma once

#include <stdexcept>
#include <string>

namespace ediqkd {

// Precondition or range violation on a numeric argument.
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-range configuration input (CLI exit code 2).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A search or threshold problem with no admissible answer (CLI exit code 3).
struct no_solution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ediqkd
