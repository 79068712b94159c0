#pragma once

#include <stdexcept>
#include <string>

namespace hll {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

// Two sketches with different (p, q) were combined.
class ConfigMismatch : public Error {
public:
    using Error::Error;
};

// Malformed serialized sketch (magic, version, length, parameters).
class FormatError : public Error {
public:
    using Error::Error;
};

// A serialized register exceeds q + 1.
class RangeError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// Large-range correction evaluated at raw >= 2^bits.
class OutOfDomain : public DomainError {
public:
    using DomainError::DomainError;
};

// Original composite estimator requested for p + q != 32.
class UnsupportedConfig : public DomainError {
public:
    using DomainError::DomainError;
};

// Linear counting with no zero-valued registers left.
class ZeroRegistersExhausted : public DomainError {
public:
    using DomainError::DomainError;
};

enum class DegenerateKind { zero, saturated };

// The ML bracket is undefined because every register is zero or saturated.
class Degenerate : public DomainError {
public:
    Degenerate(DegenerateKind kind, const std::string& what) : DomainError(what), kind_(kind) {}
    DegenerateKind kind() const noexcept { return kind_; }

private:
    DegenerateKind kind_;
};

// An iterative solver hit its iteration cap.
class NoConvergence : public Error {
public:
    using Error::Error;
};

}  // namespace hll
