#pragma once

#include <stdexcept>
#include <string>

namespace acro {

// Raised for malformed or inconsistent input data (files, records, score
// vectors). The CLI maps it to exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acro
