#pragma once

#include <stdexcept>
#include <string>

namespace wavelocate {

// Error families. The CLI maps each family to a fixed process exit code:
// configuration 2, numeric/solver 3, I/O 4, training 5.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// configuration family
struct InvalidMaterial : ConfigError { using ConfigError::ConfigError; };
struct InvalidParameter : ConfigError { using ConfigError::ConfigError; };
struct LengthMismatch : ConfigError { using ConfigError::ConfigError; };
struct DimensionMismatch : ConfigError { using ConfigError::ConfigError; };
struct InvalidDamageCount : ConfigError { using ConfigError::ConfigError; };
struct EmptyPrediction : ConfigError { using ConfigError::ConfigError; };

// numeric/solver family
struct NoRootFound : SolverError { using SolverError::SolverError; };
struct DegenerateTable : SolverError { using SolverError::SolverError; };
struct PathTooShort : SolverError { using SolverError::SolverError; };
struct ZeroWavenumber : SolverError { using SolverError::SolverError; };
struct ZeroSignal : SolverError { using SolverError::SolverError; };
struct NotConjugateSymmetric : SolverError { using SolverError::SolverError; };
struct EmptyModel : SolverError { using SolverError::SolverError; };

// training family
struct NonFiniteActivation : TrainingError { using TrainingError::TrainingError; };
struct NonFiniteGradient : TrainingError { using TrainingError::TrainingError; };
struct DivergedTraining : TrainingError { using TrainingError::TrainingError; };

}  // namespace wavelocate
