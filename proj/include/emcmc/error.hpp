#pragma once

#include <stdexcept>
#include <string>

namespace emcmc {

// Error taxonomy used across the library. The CLI maps Config/Dimension to
// exit code 2 and Numerical to exit code 3.
enum class ErrorKind {
  Config,     // invalid configuration, arguments, or unsupported combination
  Dimension,  // shape mismatch between model, data, or parameter vector
  Numerical,  // singular matrix, non-finite value, failed factorization
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}
[[noreturn]] inline void throw_dimension(const std::string& msg) {
  throw Error(ErrorKind::Dimension, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorKind::Numerical, msg);
}

}  // namespace emcmc
