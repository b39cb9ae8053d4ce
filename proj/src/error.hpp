#pragma once

#include <stdexcept>
#include <string>

namespace odin {

// Mirrors the odin_status values in include/odin/odin.h one-to-one;
// capi.cpp static_asserts the correspondence.
enum class Status : int {
    Ok = 0,
    InvalidArgument = 1,
    InvalidAddress = 2,
    InvalidTopology = 3,
    UnknownAddress = 4,
    UnknownTarget = 5,
    TransportUnavailable = 6,
    NoReachableHop = 7,
    StrictExhausted = 8,
    EmptySampleSet = 9,
    ZeroActual = 10,
    IoFailure = 11,
    ParseFailure = 12,
    Internal = 13,
};

const char* status_name(Status s);

class Error : public std::runtime_error {
public:
    Error(Status status, const std::string& what)
        : std::runtime_error(what), status_(status) {}

    Status status() const { return status_; }

private:
    Status status_;
};

[[noreturn]] inline void raise(Status status, const std::string& what) {
    throw Error(status, what);
}

}  // namespace odin
