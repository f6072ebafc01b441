#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isoflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands live on different meshes or target spaces.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// A form handed to an operation that requires exactness is not exact.
class NonExactError : public Error {
 public:
  NonExactError(std::size_t edge, double residual, const std::string& what)
      : Error(what), edge_(edge), residual_(residual) {}

  std::size_t edge() const noexcept { return edge_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t edge_;
  double residual_;
};

/// The stiffness factorization failed, which means the mesh is invalid.
class SolveError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace isoflow
