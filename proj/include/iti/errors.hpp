#pragma once

#include <stdexcept>
#include <string>

namespace iti {

// Bad shapes, out-of-range hyperparameters, malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: empty buffers, mismatched tapes.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite losses or divergence during any training loop.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iti
