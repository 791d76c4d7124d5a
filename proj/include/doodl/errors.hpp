#pragma once

#include <stdexcept>
#include <string>

namespace doodl {

// Common base so callers can catch any library failure in one place.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidShape : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct IllConditionedBase : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct InfeasibleAggregate : Error { using Error::Error; };
struct InvalidMeasure : Error { using Error::Error; };
struct CoefficientFitFailed : Error { using Error::Error; };
struct TrajectoryTooShort : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct SimulationDiverged : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct InvalidInput : Error { using Error::Error; };

}  // namespace doodl
