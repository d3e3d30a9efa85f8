#pragma once

#include <stdexcept>
#include <string>

namespace ncbf {

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct SingularKkt : std::runtime_error {
  explicit SingularKkt(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateState : std::runtime_error {
  explicit DegenerateState(const std::string& what) : std::runtime_error(what) {}
};

struct RelativeDegreeMismatch : std::runtime_error {
  explicit RelativeDegreeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionViolated : std::runtime_error {
  explicit PreconditionViolated(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ncbf
