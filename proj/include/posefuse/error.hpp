#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace posefuse {

/// Base of every error raised by the library. The CLI maps plain `Error`
/// to exit code 2 (usage/validation) and `NumericalError` to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

#define POSEFUSE_DEFINE_ERROR(Name, Base) \
  class Name : public Base {              \
   public:                                \
    using Base::Base;                     \
  };

// geometry
POSEFUSE_DEFINE_ERROR(SingularConversion, NumericalError)
POSEFUSE_DEFINE_ERROR(NegativeRadicand, NumericalError)

// nn
POSEFUSE_DEFINE_ERROR(ShapeMismatch, Error)
POSEFUSE_DEFINE_ERROR(NonPositiveSigma, Error)
POSEFUSE_DEFINE_ERROR(NaNGradient, NumericalError)
POSEFUSE_DEFINE_ERROR(EmptyDataset, Error)
POSEFUSE_DEFINE_ERROR(DivergedTraining, NumericalError)
POSEFUSE_DEFINE_ERROR(CorruptModelFile, Error)

// fusion
POSEFUSE_DEFINE_ERROR(EmptyEnsemble, Error)
POSEFUSE_DEFINE_ERROR(DegenerateQuaternion, NumericalError)
POSEFUSE_DEFINE_ERROR(LineageMismatch, Error)

// data
POSEFUSE_DEFINE_ERROR(UnsupportedImage, Error)
POSEFUSE_DEFINE_ERROR(TooFewRecords, Error)
POSEFUSE_DEFINE_ERROR(IoError, Error)
POSEFUSE_DEFINE_ERROR(MissingImage, IoError)

// eval
POSEFUSE_DEFINE_ERROR(LengthMismatch, Error)
POSEFUSE_DEFINE_ERROR(EmptyInput, Error)
POSEFUSE_DEFINE_ERROR(InsufficientSamples, Error)
POSEFUSE_DEFINE_ERROR(ZeroBaseline, Error)

#undef POSEFUSE_DEFINE_ERROR

/// Malformed pose file line. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace posefuse
