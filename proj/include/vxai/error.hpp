#pragma once

#include <stdexcept>
#include <string>

namespace vxai {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input data (volumes, graphs, tables).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation whose input admits no meaningful answer
/// (constant data for Otsu/Spearman, zero variance for CNR, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition (out-of-range coordinate, bad index).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace vxai
