// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hmdtrack {

// Base class for every error the engine raises. The exit-code category is
// what the CLI maps onto process exit codes (see tools/).
enum class ErrorCategory {
  kInput,       // unreadable, malformed, or inconsistent inputs
  kDegenerate,  // numerically or temporally degenerate data
  kCalibration, // calibration procedure could not complete
};

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& msg)
      : std::runtime_error(msg), category_(category) {}
  ErrorCategory category() const { return category_; }

private:
  ErrorCategory category_;
};

#define HMDTRACK_DEFINE_ERROR(NAME, CATEGORY)                   \
  class NAME : public Error {                                   \
  public:                                                       \
    explicit NAME(const std::string& msg)                       \
        : Error(ErrorCategory::CATEGORY, std::string(#NAME ": ") + msg) {} \
  }

HMDTRACK_DEFINE_ERROR(ParseError, kInput);
HMDTRACK_DEFINE_ERROR(VersionMismatch, kInput);
HMDTRACK_DEFINE_ERROR(DimensionError, kInput);
HMDTRACK_DEFINE_ERROR(TopologyError, kInput);
HMDTRACK_DEFINE_ERROR(ShapeMismatch, kInput);
HMDTRACK_DEFINE_ERROR(MissingStream, kInput);
HMDTRACK_DEFINE_ERROR(UnknownSensor, kInput);
HMDTRACK_DEFINE_ERROR(EmptyInput, kInput);
HMDTRACK_DEFINE_ERROR(UnsupportedRate, kInput);

HMDTRACK_DEFINE_ERROR(DegenerateInput, kDegenerate);
HMDTRACK_DEFINE_ERROR(NonMonotonicTime, kDegenerate);
HMDTRACK_DEFINE_ERROR(TooShort, kDegenerate);
HMDTRACK_DEFINE_ERROR(LengthMismatch, kDegenerate);
HMDTRACK_DEFINE_ERROR(AllMasked, kDegenerate);

HMDTRACK_DEFINE_ERROR(NoStillSegment, kCalibration);
HMDTRACK_DEFINE_ERROR(AmbiguousAssignment, kCalibration);

#undef HMDTRACK_DEFINE_ERROR

} // namespace hmdtrack
