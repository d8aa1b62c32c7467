#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace capimg {

/// Base of every error thrown by the library. `code()` is a short stable tag
/// used by the CLI for its machine-parsable failure line.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

  private:
    std::string code_;
};

class GeometryError : public Error {
  public:
    explicit GeometryError(const std::string& what) : Error("invalid-geometry", what) {}
};

class ResolutionError : public Error {
  public:
    ResolutionError(std::string feature, const std::string& what)
        : Error("resolution", what), feature_(std::move(feature)) {}
    const std::string& feature() const noexcept { return feature_; }

  private:
    std::string feature_;
};

class BoundsError : public Error {
  public:
    explicit BoundsError(const std::string& what) : Error("bounds", what) {}
};

class BoundaryConditionError : public Error {
  public:
    explicit BoundaryConditionError(const std::string& what) : Error("invalid-bc", what) {}
};

class ConvergenceError : public Error {
  public:
    ConvergenceError(double residual, std::size_t iterations, const std::string& what)
        : Error("convergence", what), residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

  private:
    double residual_;
    std::size_t iterations_;
};

class SamplingError : public Error {
  public:
    explicit SamplingError(const std::string& what) : Error("sampling", what) {}
};

class AlignmentError : public Error {
  public:
    explicit AlignmentError(const std::string& what) : Error("period-alignment", what) {}
};

class DegenerateRangeError : public Error {
  public:
    explicit DegenerateRangeError(const std::string& what) : Error("degenerate-range", what) {}
};

class DimensionError : public Error {
  public:
    explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class ParseError : public Error {
  public:
    ParseError(std::size_t row, std::size_t col, const std::string& what)
        : Error("parse", what), row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

  private:
    std::size_t row_;
    std::size_t col_;
};

class ConfigError : public Error {
  public:
    ConfigError(std::string path, const std::string& what)
        : Error("config", path + ": " + what), path_(std::move(path)) {}
    /// JSON path of the offending key, e.g. "probe.params.s".
    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

class ScanPositionError : public Error {
  public:
    ScanPositionError(std::size_t i, std::size_t j, const std::string& inner_code, const std::string& what)
        : Error(inner_code, "scan position (" + std::to_string(i) + ", " + std::to_string(j) + "): " + what),
          i_(i), j_(j) {}
    std::size_t i() const noexcept { return i_; }
    std::size_t j() const noexcept { return j_; }

  private:
    std::size_t i_;
    std::size_t j_;
};

class IoError : public Error {
  public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace capimg
