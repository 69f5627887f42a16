#pragma once

#include <stdexcept>
#include <string>

namespace hybridfusion {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (non-positive leaf, empty input where forbidden, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A metric cannot be evaluated on the given inputs.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// A patch id was not found in a grid.
class LookupError : public Error {
 public:
  using Error::Error;
};

class DescriptorError : public Error {
 public:
  using Error::Error;
};

/// Pearson correlation is undefined (zero variance).
class SimilarityError : public Error {
 public:
  using Error::Error;
};

/// Degenerate annulus geometry (LiDAR centroid on the GNSS origin).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// Ground removal left nothing.
class EmptyResultError : public BoundaryError {
 public:
  using BoundaryError::BoundaryError;
};

/// No NDT cell reached the minimum point count.
class GridError : public Error {
 public:
  using Error::Error;
};

class FusionError : public Error {
 public:
  using Error::Error;
};

/// Malformed cloud file. Carries the 1-based line number where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Binary PLY/PCD or other unsupported encodings.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The pipeline produced no patch transforms.
class PipelineError : public Error {
 public:
  using Error::Error;
};

}  // namespace hybridfusion
