#pragma once

#include <stdexcept>
#include <string>

namespace gf {

// Base class for all library errors. Subclasses name the failure mode so
// callers can catch specific conditions without string matching.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionError : Error { using Error::Error; };

// core geometry
struct EmptyCloudError : Error { using Error::Error; };
struct DegenerateVectorError : Error { using Error::Error; };

// tiny-net
struct ShapeError : Error { using Error::Error; };
struct TapeError : Error { using Error::Error; };
struct NonFiniteGradientError : Error { using Error::Error; };

// dif-model
struct TrainingDivergedError : Error { using Error::Error; };
struct EmptyMeshError : Error { using Error::Error; };

// grasp representation
struct DegenerateApproachError : Error { using Error::Error; };
struct NoContactError : Error { using Error::Error; };
struct NoGraspPointsError : Error { using Error::Error; };

// refinement
struct DegenerateNormalError : Error { using Error::Error; };
struct DegenerateContactsError : Error { using Error::Error; };

// evaluation
struct NoInstancesError : Error { using Error::Error; };
struct NoGraspsError : Error { using Error::Error; };

// persistence
struct IoError : Error { using Error::Error; };
struct FormatVersionError : IoError { using IoError::IoError; };

}  // namespace gf
