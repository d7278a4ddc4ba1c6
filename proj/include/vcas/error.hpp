#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcas {

// Process exit codes shared by every command.
enum class ExitCode : int {
  Ok = 0,
  Usage = 1,      // bad arguments or configuration
  Data = 2,       // missing, malformed or degenerate data
  Numerical = 3,  // eigensolve failure, non-finite loss
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ExitCode::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

// A row with zero norm, a dataset without variance, a single-class label set.
class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what) : Error(ExitCode::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::Numerical, what) {}
};

// Requested more kernel PCA components than the centered Gram matrix supports.
class RankError : public ParameterError {
 public:
  RankError(const std::string& what, std::size_t attainable)
      : ParameterError(what), attainable_(attainable) {}
  std::size_t attainable_max() const noexcept { return attainable_; }

 private:
  std::size_t attainable_;
};

}  // namespace vcas
