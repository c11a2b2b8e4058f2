#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace delayprop {

// Malformed input data (records, cases, model documents).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A network or scenario configuration that violates structural invariants.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evidence that names an unknown node or state, or is otherwise malformed.
class EvidenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evidence (or a Markov blanket configuration) with zero probability.
class InconsistentEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A case that does not assign a state to a required node.
class IncompleteCase : public DataError {
 public:
  IncompleteCase(std::size_t index, const std::string& node)
      : DataError("case " + std::to_string(index) + " has no state for '" + node + "'"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace delayprop
