#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace grownet {

// Error taxonomy. The CLI maps DataError (and subclasses) to exit code 2,
// numerical/contract failures to exit code 3, partial pipeline results to 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data (files, panels, configs).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, long line)
      : DataError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ConflictError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyPanelError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSeriesError : public DataError {
 public:
  using DataError::DataError;
};

class UndefinedMeanError : public DataError {
 public:
  using DataError::DataError;
};

// Argument outside its mathematical domain.
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

// API misuse: a precondition the caller must guarantee.
class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

// A time series with an explicit observation mask. values is NaN where
// mask is false.
struct Series {
  Eigen::VectorXd values;
  BoolVector mask;

  Eigen::Index size() const { return values.size(); }
};

}  // namespace grownet
