#pragma once

#include <stdexcept>
#include <string>

namespace mkteq {

// Base class for everything the library throws on bad inputs or failed
// numerical preconditions.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadDimension : ModelError { using ModelError::ModelError; };
struct DimensionMismatch : ModelError { using ModelError::ModelError; };
struct NonSpdCovariance : ModelError { using ModelError::ModelError; };
struct NonDiagonalCost : ModelError { using ModelError::ModelError; };
struct InadmissibleNoise : ModelError { using ModelError::ModelError; };
struct GridMismatch : ModelError { using ModelError::ModelError; };
struct TimeOrder : ModelError { using ModelError::ModelError; };
struct BadIndex : ModelError { using ModelError::ModelError; };
struct BadSeed : ModelError { using ModelError::ModelError; };
struct WrongInvestorCount : ModelError { using ModelError::ModelError; };
struct UnequalToleranceUnsupported : ModelError { using ModelError::ModelError; };
struct SpectralFailure : ModelError { using ModelError::ModelError; };
struct SingularSystem : ModelError { using ModelError::ModelError; };
struct SingularKkt : ModelError { using ModelError::ModelError; };
struct NoConvergence : ModelError { using ModelError::ModelError; };
struct BadSweepValue : ModelError { using ModelError::ModelError; };

// CLI-facing failures, mapped to distinct exit codes by the tool.
struct ConfigParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mkteq
