#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rtsim {

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shift would push data-bearing domains past the strip's overhead region.
class OverheadExceeded : public SimError {
public:
    using SimError::SimError;
};

// A layer does not fit its assigned storage; carries the shortfall in bytes.
class CapacityExceeded : public SimError {
public:
    CapacityExceeded(const std::string& msg, uint64_t shortfall_bytes)
        : SimError(msg), shortfall(shortfall_bytes) {}
    uint64_t shortfall;
};

class DistanceOutOfRange : public SimError {
public:
    using SimError::SimError;
};

class ConfigError : public SimError {
public:
    using SimError::SimError;
};

class IoError : public SimError {
public:
    using SimError::SimError;
};

class VerifyError : public SimError {
public:
    using SimError::SimError;
};

} // namespace rtsim
