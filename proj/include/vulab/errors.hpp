#pragma once

#include <stdexcept>
#include <string>

namespace vulab {

// Base of every error raised by the library. Each subclass maps to one
// failure mode that callers are expected to tell apart.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define VULAB_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

VULAB_DEFINE_ERROR(InvalidPoint);
VULAB_DEFINE_ERROR(CapabilityMissing);
VULAB_DEFINE_ERROR(UnknownBuiltin);
VULAB_DEFINE_ERROR(AnchorNotInHull);
VULAB_DEFINE_ERROR(DimensionTooLarge);
VULAB_DEFINE_ERROR(SolverBudgetExceeded);
VULAB_DEFINE_ERROR(InconsistentGradient);
VULAB_DEFINE_ERROR(EmptyBundle);
VULAB_DEFINE_ERROR(SingularHessian);
VULAB_DEFINE_ERROR(LambdaTooLarge);
VULAB_DEFINE_ERROR(NotASubspace);
VULAB_DEFINE_ERROR(PreconditionFailed);
VULAB_DEFINE_ERROR(InvalidConfig);
VULAB_DEFINE_ERROR(ParseError);

#undef VULAB_DEFINE_ERROR

}  // namespace vulab
