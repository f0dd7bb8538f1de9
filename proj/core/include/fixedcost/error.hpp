#pragma once

#include <stdexcept>

namespace fixedcost {

/// Raised when caller-supplied data violates an operation's precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace fixedcost
