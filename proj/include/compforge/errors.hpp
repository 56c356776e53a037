#pragma once

#include <stdexcept>
#include <string>

namespace compforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define COMPFORGE_DEFINE_ERROR(Name)      \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
    const char* kind() const noexcept override { return #Name; } \
  };

COMPFORGE_DEFINE_ERROR(SchemaError)
COMPFORGE_DEFINE_ERROR(ReferenceError)
COMPFORGE_DEFINE_ERROR(ShapeError)
COMPFORGE_DEFINE_ERROR(ExhaustedError)
COMPFORGE_DEFINE_ERROR(DuplicateError)
COMPFORGE_DEFINE_ERROR(MissingMetricError)
COMPFORGE_DEFINE_ERROR(DegenerateError)
COMPFORGE_DEFINE_ERROR(UnknownConfigError)
COMPFORGE_DEFINE_ERROR(AliasError)
COMPFORGE_DEFINE_ERROR(InsufficientError)
COMPFORGE_DEFINE_ERROR(TooShortError)
COMPFORGE_DEFINE_ERROR(DimMismatchError)
COMPFORGE_DEFINE_ERROR(DivergenceError)
COMPFORGE_DEFINE_ERROR(EmptyCandidateError)
COMPFORGE_DEFINE_ERROR(FingerprintError)

#undef COMPFORGE_DEFINE_ERROR

}  // namespace compforge
