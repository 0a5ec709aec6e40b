#ifndef WEAKCONTACT_ERRORS_HPP
#define WEAKCONTACT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wc {

// Error taxonomy shared by all modules. Everything derives from
// std::runtime_error so callers may catch coarsely.

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

struct StabilityError : std::runtime_error {
  explicit StabilityError(const std::string &msg) : std::runtime_error(msg) {}
};

struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string &msg) : std::runtime_error(msg) {}
};

struct UnboundedError : std::runtime_error {
  explicit UnboundedError(const std::string &msg) : std::runtime_error(msg) {}
};

struct StructureError : std::runtime_error {
  explicit StructureError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace wc

#endif
