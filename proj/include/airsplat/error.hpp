#pragma once

#include <stdexcept>
#include <string>

namespace airsplat {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AIRSPLAT_ERROR_TYPE(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

AIRSPLAT_ERROR_TYPE(DomainError);
AIRSPLAT_ERROR_TYPE(IndexError);
AIRSPLAT_ERROR_TYPE(ShapeError);
AIRSPLAT_ERROR_TYPE(DegenerateFaceError);
AIRSPLAT_ERROR_TYPE(NoOverlapError);
AIRSPLAT_ERROR_TYPE(EmptyMeshError);
AIRSPLAT_ERROR_TYPE(AnchoringError);
AIRSPLAT_ERROR_TYPE(InsufficientDepthError);
AIRSPLAT_ERROR_TYPE(NonFiniteGradientError);
AIRSPLAT_ERROR_TYPE(SpecError);
AIRSPLAT_ERROR_TYPE(TrajectoryTooShortError);
AIRSPLAT_ERROR_TYPE(DatasetError);
AIRSPLAT_ERROR_TYPE(ConfigError);
AIRSPLAT_ERROR_TYPE(CoverageError);
AIRSPLAT_ERROR_TYPE(UndefinedCorrelationError);
AIRSPLAT_ERROR_TYPE(IoError);

#undef AIRSPLAT_ERROR_TYPE

}  // namespace airsplat
