#pragma once

#include <stdexcept>
#include <string>

namespace silab {

// Evaluation outside an objective's domain (e.g. the origin of a
// scale-invariant function) or a parameter outside its stated range.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed experiment config / CLI input. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form identity failed its online check during a run.
class VerificationError : public std::runtime_error {
public:
    explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace silab
