#pragma once

#include <stdexcept>
#include <string>

namespace lockstep {

// Validation and I/O failures. Messages carry file/line or key context
// where the caller has it.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lockstep
