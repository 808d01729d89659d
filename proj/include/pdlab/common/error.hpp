#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdlab {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (source text, corpus files, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

class LexError : public DataError {
 public:
  LexError(std::size_t position, const std::string& what)
      : DataError("lex error at byte " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t position, std::vector<std::string> expected)
      : DataError(format(position, expected)),
        position_(position),
        expected_(std::move(expected)) {}
  std::size_t position() const { return position_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string format(std::size_t position,
                            const std::vector<std::string>& expected) {
    std::string msg = "parse error at byte " + std::to_string(position) + ", expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += " or ";
      msg += "'" + expected[i] + "'";
    }
    return msg;
  }
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// A recognized C construct that lies outside the supported subset.
class UnsupportedConstruct : public DataError {
 public:
  UnsupportedConstruct(std::size_t position, const std::string& construct)
      : DataError("unsupported construct at byte " + std::to_string(position) +
                  ": " + construct),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A PDG node that owns no subtoken.
class EmptyNode : public DataError {
 public:
  explicit EmptyNode(std::size_t node)
      : DataError("PDG node " + std::to_string(node) + " has no member subtokens"),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class TooShort : public DataError {
 public:
  TooShort(std::size_t have, std::size_t want)
      : DataError("function has " + std::to_string(have) + " PDG nodes, prefix needs " +
                  std::to_string(want)) {}
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace pdlab
