#pragma once

#include <stdexcept>
#include <string>

namespace sclasso {

// An estimator would divide by a nonpositive residual degree count.
struct DegreesOfFreedomError : std::runtime_error {
  explicit DegreesOfFreedomError(const std::string& what) : std::runtime_error(what) {}
};

// The design is too degenerate for the requested computation.
struct DegenerateDesignError : std::runtime_error {
  explicit DegenerateDesignError(const std::string& what) : std::runtime_error(what) {}
};

// CSV ingestion failure; the message carries the offending row/column.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sclasso
