#pragma once

#include <stdexcept>
#include <string>

namespace nlnde {

// Malformed or inconsistent input data (files, annotations, corpora).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent run or model configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlnde
