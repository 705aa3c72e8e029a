#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shadowup {

// Base of every error the library throws. code() is a short stable token
// ("io", "invalid-input", ...) that the CLI prints for grepping.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class InvalidParameter : public Error {
public:
  explicit InvalidParameter(const std::string& what) : Error("invalid-parameter", what) {}
};

class IoError : public Error {
public:
  IoError(const std::string& path, const std::string& reason)
      : Error("io", "'" + path + "': " + reason), path_(path), reason_(reason) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

private:
  std::string path_;
  std::string reason_;
};

// Thrown when the illumination solve stops at max_iters above tolerance.
class ConvergenceError : public Error {
public:
  ConvergenceError(double residual, std::size_t iterations)
      : Error("convergence", "solver did not converge after " + std::to_string(iterations) +
                                 " iterations (relative residual " + std::to_string(residual) + ")"),
        residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace shadowup
