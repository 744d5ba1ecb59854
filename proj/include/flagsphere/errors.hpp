#pragma once

#include <stdexcept>
#include <string>

namespace flagsphere {

/// Caller violated a documented precondition (CLI exit code 2).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not deliver its contract (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FLAGSPHERE_DEFINE_ERROR(Name, Base)                 \
  class Name : public Base {                                \
   public:                                                  \
    explicit Name(const std::string& what) : Base(what) {}  \
  };

FLAGSPHERE_DEFINE_ERROR(PoleSingularity, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(InadmissibleAlpha, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(DegenerateWind, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(NotNormalized, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(EquatorialOrbit, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(IdenticalImages, PreconditionError)
FLAGSPHERE_DEFINE_ERROR(InvalidParameters, PreconditionError)

FLAGSPHERE_DEFINE_ERROR(NumericalBreakdown, NumericalError)
FLAGSPHERE_DEFINE_ERROR(ToleranceFailure, NumericalError)
FLAGSPHERE_DEFINE_ERROR(RefinementDiverged, NumericalError)
FLAGSPHERE_DEFINE_ERROR(NotConstantCurvature, NumericalError)
FLAGSPHERE_DEFINE_ERROR(RootBracketFailure, NumericalError)

#undef FLAGSPHERE_DEFINE_ERROR

}  // namespace flagsphere
