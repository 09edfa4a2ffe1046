#pragma once

#include <stdexcept>
#include <string>

namespace ldsid {

// Error taxonomy shared across the library. The CLI maps these onto its
// documented exit codes (2 = parameter/domain, 3 = schema/input, 4 = solver
// divergence).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InstabilityError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedCheckError : std::logic_error {
  using std::logic_error::logic_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long long iteration() const noexcept { return iteration_; }

 private:
  long long iteration_;
};

}  // namespace ldsid
