#pragma once

#include <stdexcept>
#include <string>

namespace licam {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or scene specification (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File format / filesystem problems (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Feature association and graph construction failures (CLI exit code 3).
class AssociationError : public Error {
 public:
  using Error::Error;
};

/// Joint optimization failures (CLI exit code 4).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Model evaluation failures (CLI exit code 5).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// -- specific conditions ----------------------------------------------------

/// A point ended up at or behind the camera plane (z <= 1e-9).
class NonPositiveDepth : public Error {
 public:
  using Error::Error;
};

class DescriptorLengthMismatch : public AssociationError {
 public:
  using AssociationError::AssociationError;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class CountExceedsCloud : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class MissingNormals : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class AllObservationsGated : public SolverError {
 public:
  using SolverError::SolverError;
};

class NoCorrespondences : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

class EmptyInput : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

}  // namespace licam
