#pragma once

#include <stdexcept>
#include <string>

namespace lindstedt {

// Every failure carries the name of the construct that raised it; the CLI
// prints the stage and maps the error kind to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }
  virtual bool is_config_error() const { return false; }

 private:
  std::string stage_;
};

#define LINDSTEDT_ERROR(Name)                                     \
  class Name : public Error {                                     \
   public:                                                        \
    Name(std::string stage, const std::string& what)              \
        : Error(std::move(stage), std::string(#Name) + ": " + what) {} \
  }

LINDSTEDT_ERROR(InvariantViolation);
LINDSTEDT_ERROR(AsymmetricInput);
LINDSTEDT_ERROR(SingularShiftedMatrix);
LINDSTEDT_ERROR(SingularSchurBlock);
LINDSTEDT_ERROR(SingularA22);
LINDSTEDT_ERROR(LabelInconsistency);
LINDSTEDT_ERROR(BoundViolation);
LINDSTEDT_ERROR(NoConvergence);
LINDSTEDT_ERROR(MelnikovFailure);
LINDSTEDT_ERROR(MissingBlock);
LINDSTEDT_ERROR(MissingCounterterm);
LINDSTEDT_ERROR(NegativeAmplitudeSquare);
LINDSTEDT_ERROR(SearchExhausted);
LINDSTEDT_ERROR(BlockBoundViolation);
LINDSTEDT_ERROR(DuplicateInput);

#undef LINDSTEDT_ERROR

class ConfigError : public Error {
 public:
  ConfigError(std::string stage, const std::string& what)
      : Error(std::move(stage), "ConfigError: " + what) {}
  bool is_config_error() const override { return true; }
};

}  // namespace lindstedt
