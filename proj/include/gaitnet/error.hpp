#pragma once

#include <stdexcept>
#include <string>

namespace gaitnet {

// Bad layer/model/run configuration (shape mismatch, invalid hyperparameter).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime input (out-of-range target, empty selection).
class InputError : public std::runtime_error {
  public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, long line = 0)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

  private:
    long line_;
};

// Structurally wrong file (missing columns, empty file, bad header).
class SchemaError : public std::runtime_error {
  public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& msg, int epoch)
        : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

}  // namespace gaitnet
