#pragma once

#include <stdexcept>
#include <string>

namespace hotdeck {

// Invalid user input: malformed files, out-of-range categories, bad configs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A class needed imputation but every rung of the fallback ladder was empty.
class NoDonorError : public DataError {
 public:
  explicit NoDonorError(int cls)
      : DataError("no donor information in class " + std::to_string(cls)), cls_(cls) {}
  int imputation_class() const noexcept { return cls_; }

 private:
  int cls_;
};

// Linear-algebra or convergence failure; signals a bug, not bad input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hotdeck
