#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace palm {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

private:
  std::size_t expected_;
  std::size_t actual_;
};

// A non-finite value appeared in one of the solver updates.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t iteration, std::string update)
      : Error("solver diverged at iteration " + std::to_string(iteration) + " in " + update),
        iteration_(iteration),
        update_(std::move(update)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::string& update() const noexcept { return update_; }

private:
  std::size_t iteration_;
  std::string update_;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

}  // namespace palm
