#pragma once

#include <stdexcept>
#include <string>

namespace lsg {

// Shape/axis mismatches in tensor ops.
class shape_error : public std::invalid_argument {
public:
    explicit shape_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// API misuse: a stated precondition was violated (non-scalar loss,
// non-positive sigma, too few samples, ...).
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

// A tensor op produced or received NaN/Inf.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration (ratios, window lengths, ...). Maps to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/unparseable input data. Maps to exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or incompatible checkpoint file. Maps to exit code 2.
class checkpoint_error : public std::runtime_error {
public:
    explicit checkpoint_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric was requested on inputs where it is undefined
// (all-zero truth for NMAE, zero-variance trace for Pearson rho).
class metric_error : public std::runtime_error {
public:
    explicit metric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborted (non-finite loss or gradient).
class train_error : public std::runtime_error {
public:
    explicit train_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lsg
