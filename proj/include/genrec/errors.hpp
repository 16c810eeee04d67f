#pragma once

#include <stdexcept>
#include <string>

namespace genrec {

// Bad argument value (negative threshold, non-finite entries, l > m, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dimension chain mismatch between nets, matrices and vectors.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested outlier count leaves no certified recovery budget.
class NoBudget : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed weight / observation / config file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every restart of a solve ended in a non-finite iterate.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genrec
