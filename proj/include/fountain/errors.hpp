#pragma once

#include <stdexcept>
#include <string>

namespace fountain {

/// Failure class used by the CLI to pick an exit code.
enum class ErrorKind { data, numerical, io, config };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Library module that raised the error ("model", "posterior", ...).
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

#define FOUNTAIN_DEFINE_ERROR(Name, Kind, Module)                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what)                             \
        : Error(ErrorKind::Kind, Module, #Name ": " + what) {}         \
  };

FOUNTAIN_DEFINE_ERROR(DegenerateDensities, data, "model")
FOUNTAIN_DEFINE_ERROR(RankDeficient, numerical, "model")
FOUNTAIN_DEFINE_ERROR(EmptyDataset, data, "model")
FOUNTAIN_DEFINE_ERROR(InvalidRecord, data, "model")
FOUNTAIN_DEFINE_ERROR(ImproperDensity, numerical, "posterior")
FOUNTAIN_DEFINE_ERROR(QuadratureNonConvergence, numerical, "posterior")
FOUNTAIN_DEFINE_ERROR(InvalidPrior, config, "posterior")
FOUNTAIN_DEFINE_ERROR(TooFewSamples, data, "mc")
FOUNTAIN_DEFINE_ERROR(InvalidMcConfig, config, "mc")
FOUNTAIN_DEFINE_ERROR(SchemaError, data, "pipeline")
FOUNTAIN_DEFINE_ERROR(NonMonotoneEpoch, data, "pipeline")
FOUNTAIN_DEFINE_ERROR(IoError, io, "pipeline")
FOUNTAIN_DEFINE_ERROR(ConfigError, config, "pipeline")

#undef FOUNTAIN_DEFINE_ERROR

/// Malformed CSV input; carries the 1-based line and column of the fault.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorKind::data, "pipeline",
              "ParseError at line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace fountain
