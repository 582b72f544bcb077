// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace xrlat {

/// Dense row-major tensor used for every parameter, activation and gradient.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-label binary selector; 1 = label participates.
using SampleMask = std::vector<std::uint8_t>;

/// Root of all library errors. Anything not derived from InputError is
/// treated as an internal / numeric failure by the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: files, configuration, arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value surfaced during training or evaluation.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::string tensor)
      : Error(what + " [" + tensor + "]"), tensor_(std::move(tensor)) {}
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

}  // namespace xrlat
