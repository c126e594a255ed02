#pragma once

#include <stdexcept>
#include <string>

namespace gtvtest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class KTooLarge : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class BinningMismatch : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

/// The statistic is infinite (or undefined) on a disconnected graph; callers
/// should enlarge the radius or the neighbour count.
class GraphDisconnected : public Error {
 public:
  explicit GraphDisconnected(const std::string& what)
      : Error(what + " (graph is disconnected; increase eps or k)") {}
};

/// File access or parse failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Integer capacities would not fit in 64 bits.
class CapacityOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace gtvtest
