#pragma once

#include <stdexcept>
#include <string>

namespace gprompt {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes (usage 1, data/format 2, numeric 3).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix shapes do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// NaN input, log of a nonpositive value, non-convergence.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

/// A mandatory input file is missing or unreadable.
class IngestionError : public Error {
public:
  using Error::Error;
};

/// Input file present but malformed.
class FormatError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class StatsError : public Error {
public:
  using Error::Error;
};

class SplitError : public Error {
public:
  using Error::Error;
};

class UsageError : public Error {
public:
  using Error::Error;
};

}  // namespace gprompt
