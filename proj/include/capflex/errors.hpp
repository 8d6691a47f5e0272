#pragma once

#include <stdexcept>
#include <string>

namespace capflex {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define CAPFLEX_ERROR_TYPE(Name)                                    \
  struct Name : Error {                                             \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

CAPFLEX_ERROR_TYPE(SupportViolation);
CAPFLEX_ERROR_TYPE(SmallnessViolated);
CAPFLEX_ERROR_TYPE(NewtonDiverged);
CAPFLEX_ERROR_TYPE(NotPlanar);
CAPFLEX_ERROR_TYPE(TooFar);
CAPFLEX_ERROR_TYPE(DegenerateGram);
CAPFLEX_ERROR_TYPE(ParamsInfeasible);
CAPFLEX_ERROR_TYPE(Unresolvable);
CAPFLEX_ERROR_TYPE(DecompNotPositive);
CAPFLEX_ERROR_TYPE(FrequencyUnresolvable);
CAPFLEX_ERROR_TYPE(HypothesisFailed);
CAPFLEX_ERROR_TYPE(HierarchyViolated);
CAPFLEX_ERROR_TYPE(NyquistViolated);
CAPFLEX_ERROR_TYPE(SingularMetric);
CAPFLEX_ERROR_TYPE(ImaginaryResidue);
CAPFLEX_ERROR_TYPE(ConfigError);
CAPFLEX_ERROR_TYPE(IoError);

#undef CAPFLEX_ERROR_TYPE

}  // namespace capflex
