#pragma once

#include <stdexcept>
#include <string>

namespace c2f {

// All recoverable library failures throw this. The message carries the
// offending shapes/values so callers can report without re-deriving them.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

} // namespace c2f
