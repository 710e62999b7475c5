#pragma once

#include <stdexcept>
#include <string>

namespace importance {

// Base of every error raised by the library. The CLI maps subclasses of
// InputError to exit code 2 and NumericError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

#define IMPORTANCE_DEFINE_ERROR(Name, Base) \
  class Name : public Base {                \
   public:                                  \
    using Base::Base;                       \
  };

IMPORTANCE_DEFINE_ERROR(ParseError, InputError)
IMPORTANCE_DEFINE_ERROR(DanglingReference, InputError)
IMPORTANCE_DEFINE_ERROR(InvariantViolation, InputError)
IMPORTANCE_DEFINE_ERROR(EmptyJudgmentSet, InputError)
IMPORTANCE_DEFINE_ERROR(MissingPixels, InputError)
IMPORTANCE_DEFINE_ERROR(MissingSaliency, InputError)
IMPORTANCE_DEFINE_ERROR(MissingFixations, InputError)
IMPORTANCE_DEFINE_ERROR(MissingSentence, InputError)
IMPORTANCE_DEFINE_ERROR(LengthMismatch, InputError)
IMPORTANCE_DEFINE_ERROR(UnknownItem, InputError)
IMPORTANCE_DEFINE_ERROR(ItemSetMismatch, InputError)
IMPORTANCE_DEFINE_ERROR(EmptyInput, InputError)
IMPORTANCE_DEFINE_ERROR(TooFewPairs, InputError)
IMPORTANCE_DEFINE_ERROR(InsufficientJudgments, InputError)
IMPORTANCE_DEFINE_ERROR(StateUnavailable, InputError)
IMPORTANCE_DEFINE_ERROR(DegenerateInput, NumericError)

#undef IMPORTANCE_DEFINE_ERROR

}  // namespace importance
