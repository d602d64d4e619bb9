#pragma once

#include <stdexcept>
#include <string>

namespace ktsp {

// Input problems: malformed files, invalid instances, bad arguments.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInstance : InputError {
    using InputError::InputError;
};

struct InvalidArgument : InputError {
    using InputError::InputError;
};

// An oracle or guard refused because the input exceeds its hard cap.
struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A subroutine broke the contract its caller relies on.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Internal invariant violation (a bug, not a bad input).
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// The DP found no feasible root entry under the configured parameters.
struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ktsp
