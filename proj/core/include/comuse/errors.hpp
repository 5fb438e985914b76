// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comuse {

/* Base class for everything thrown by this library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/* A caller violated a documented precondition. */
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/* File or directory level I/O failure. */
class IoError : public Error {
 public:
  using Error::Error;
};

/* Malformed configuration: experiment config, prompt template, CLI input. */
class ConfigError : public Error {
 public:
  using Error::Error;
};

// --- corpus ---

/* Structural problem with a dataset file: missing column, duplicate id. */
class SchemaError : public Error {
 public:
  using Error::Error;
};

/* A specific data row could not be accepted. Row numbers are 1-based and
 * count the header, so they match what an editor shows. */
class RowError : public Error {
 public:
  RowError(const std::string& message, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + message), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

/* Stratified split asked to sample from an empty class. */
class StratifyError : public Error {
 public:
  using Error::Error;
};

// --- embed ---

/* Vectors of mismatched length met where one length was required. */
class DimensionError : public Error {
 public:
  using Error::Error;
};

/* A precomputed embedding store was queried for a sequence it lacks. */
class UnknownSequenceError : public Error {
 public:
  using Error::Error;
};

// --- svm ---

class TrainingError : public Error {
 public:
  using Error::Error;
};

/* Training set unusable: fewer than two points, or a single class. */
class DegenerateTrainingError : public TrainingError {
 public:
  using TrainingError::TrainingError;
};

/* Optimizer hit its iteration cap before satisfying the stopping rule.
 * Carries the best dual objective reached so runs can be compared. */
class ConvergenceError : public TrainingError {
 public:
  ConvergenceError(const std::string& message, double best_dual_objective)
      : TrainingError(message), best_dual_objective_(best_dual_objective) {}
  double best_dual_objective() const noexcept { return best_dual_objective_; }

 private:
  double best_dual_objective_;
};

/* Model file rejected: bad magic, version, truncation or checksum. */
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

// --- augment ---

/* No derangement exists (n < 2) or the input is unusable. */
class DerangementError : public Error {
 public:
  using Error::Error;
};

/* Requested sample exceeds the available class population. */
class SamplingError : public Error {
 public:
  using Error::Error;
};

/* Network level chat failure after the retry budget was spent. */
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts)
      : Error(message), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/* The endpoint answered, but with something unusable: auth failure,
 * empty completion, malformed body. Not retried. */
class ContentError : public Error {
 public:
  using Error::Error;
};

/* A completion could not be mapped to a label. Keeps the raw text so the
 * offending response can be logged or inspected. */
class ResponseParseError : public Error {
 public:
  ResponseParseError(const std::string& message, std::string response)
      : Error(message), response_(std::move(response)) {}
  const std::string& response() const noexcept { return response_; }

 private:
  std::string response_;
};

/* Replay-mode chat client had no recorded response for a prompt. */
class CacheMissError : public Error {
 public:
  using Error::Error;
};

}  // namespace comuse
