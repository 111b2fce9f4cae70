#pragma once

#include <stdexcept>
#include <string>

namespace vinpaint {

// Base of every error thrown by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VINPAINT_DEFINE_ERROR(Name)                              \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

VINPAINT_DEFINE_ERROR(EmptyInput);
VINPAINT_DEFINE_ERROR(EmptyDataset);
VINPAINT_DEFINE_ERROR(EmptyMask);
VINPAINT_DEFINE_ERROR(ShapeMismatch);
VINPAINT_DEFINE_ERROR(IndivisibleSize);
VINPAINT_DEFINE_ERROR(TooFewFrames);
VINPAINT_DEFINE_ERROR(ChecksumError);
VINPAINT_DEFINE_ERROR(VersionError);
VINPAINT_DEFINE_ERROR(InvalidConfig);
VINPAINT_DEFINE_ERROR(IoError);

#undef VINPAINT_DEFINE_ERROR

}  // namespace vinpaint
