#pragma once

#include <stdexcept>
#include <string>

namespace pdg {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define PDG_DECLARE_ERROR(Name)                                              \
  class Name : public Error {                                                \
  public:                                                                    \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}     \
  }

PDG_DECLARE_ERROR(DegenerateFrame);
PDG_DECLARE_ERROR(SingularSystem);
PDG_DECLARE_ERROR(NearTerminal);
PDG_DECLARE_ERROR(NonFiniteState);
PDG_DECLARE_ERROR(DegenerateLabels);
PDG_DECLARE_ERROR(InsufficientData);
PDG_DECLARE_ERROR(NonConvergence);
PDG_DECLARE_ERROR(DegenerateConic);
PDG_DECLARE_ERROR(DegenerateCenter);
PDG_DECLARE_ERROR(ZeroLambda);
PDG_DECLARE_ERROR(NoFeasiblePerturbation);
PDG_DECLARE_ERROR(NoHorizontalIntersection);
PDG_DECLARE_ERROR(RetargetInfeasible);
PDG_DECLARE_ERROR(UndefinedReduction);
PDG_DECLARE_ERROR(MissingModels);
PDG_DECLARE_ERROR(ConfigError);
PDG_DECLARE_ERROR(FormatError);

#undef PDG_DECLARE_ERROR

}  // namespace pdg
