#pragma once

#include <stdexcept>
#include <string>

namespace ipfsel {

enum class ErrorKind {
    invalid_input,
    region,
    tuning_failed,
    io,
    runtime,
};

// Single exception type for the library; the C boundary maps `kind` onto
// status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::invalid_input, what);
}

} // namespace ipfsel
