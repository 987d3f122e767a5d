#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qsdlab {

enum class ErrorClass { Usage, Domain, Numerical, Infeasible };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorClass::Usage, what) {}
};

// Position outside the admissible set O_V of the potential.
struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorClass::Domain, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorClass::Numerical, what) {}
};

struct NumericalBlowup : NumericalError {
  using NumericalError::NumericalError;
};

struct ExtinctionError : NumericalError {
  using NumericalError::NumericalError;
};

struct OracleError : NumericalError {
  OracleError(const std::string& what, double res) : NumericalError(what), residual(res) {}
  double residual;
};

struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& what) : Error(ErrorClass::Infeasible, what) {}
};

// Collects every violated constraint of a configuration before throwing.
struct ConfigError : UsageError {
  explicit ConfigError(std::vector<std::string> v);
  std::vector<std::string> violations;
};

// Process exit status used by the CLI: usage=2, numerical=3, infeasible=4.
int exit_code(ErrorClass cls) noexcept;

}  // namespace qsdlab
