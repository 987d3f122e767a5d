#include "qsdlab/errors.hpp"

namespace qsdlab {

ConfigError::ConfigError(std::vector<std::string> v)
    : UsageError([&] {
        std::string msg = "invalid configuration:";
        for (const auto& s : v) msg += "\n  - " + s;
        return msg;
      }()),
      violations(std::move(v)) {}

int exit_code(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::Usage: return 2;
    case ErrorClass::Domain: return 2;
    case ErrorClass::Numerical: return 3;
    case ErrorClass::Infeasible: return 4;
  }
  return 1;
}

}  // namespace qsdlab
