#ifndef DLRR_ERROR_HPP
#define DLRR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dlrr {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind { config = 1, data = 2, solver = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

}  // namespace dlrr

#endif  // DLRR_ERROR_HPP
