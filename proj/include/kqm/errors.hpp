#pragma once

#include <stdexcept>
#include <string>

namespace kqm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two interpolation nodes share an abscissa.
class DuplicateNode : public Error {
 public:
  explicit DuplicateNode(long long node)
      : Error("duplicate interpolation node " + std::to_string(node)), node_(node) {}
  long long node() const { return node_; }

 private:
  long long node_;
};

/// An argument lies outside the domain of the operation (non-positive mass, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An index lies outside the stored data.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A requested parameter breaks the positivity requirement; carries the first
/// integer at which the constructed polynomial is not strictly positive.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, long long witness)
      : Error(what + " (first failure at " + std::to_string(witness) + ")"), witness_(witness) {}
  long long witness() const { return witness_; }

 private:
  long long witness_;
};

/// Preimage enumeration would need vertices deeper than the supplied cap.
class CapError : public Error {
 public:
  using Error::Error;
};

/// The measure (or weighted measure) exceeds the supplied bound M.
class BoundednessError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented hypotheses.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A construction provably has no solution for the given data.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace kqm
