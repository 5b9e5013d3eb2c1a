#pragma once

#include <stdexcept>
#include <string>

namespace uavsim {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// UAV separations cannot be satisfied inside the deployment area.
class InfeasibleGeometry : public Error {
 public:
  using Error::Error;
};

// Zero propagation distance or another geometry the SIM model cannot evaluate.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

// Input too large for an exhaustive routine.
class SizeLimit : public Error {
 public:
  using Error::Error;
};

// Training loss became non-finite.
class Divergence : public Error {
 public:
  using Error::Error;
};

// Bad or unreadable configuration, dataset or checkpoint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace uavsim
