#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metaemb {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: unreadable or malformed files, empty inputs, failed
// lookups, impossible alignments.
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its contract (dimension mismatch,
// invalid index, rank larger than the matrix allows).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Undefined or non-finite numeric results (zero-vector cosine, NaN loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training hit a non-finite loss; carries the epoch it happened in.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : NumericError(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace metaemb
