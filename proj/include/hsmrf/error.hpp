#pragma once

#include <stdexcept>
#include <string>

namespace hsmrf {

/// Bad user input: malformed files, invalid arguments, inconsistent data.
/// The CLI maps these to exit code 2.
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string &what) : std::invalid_argument(what) {}
};

/// Newick syntax or topology problem. `position` is the byte offset where
/// parsing stopped, or npos when the problem is not positional.
class NewickError : public InputError {
public:
  NewickError(const std::string &what, std::size_t position = std::string::npos)
      : InputError(position == std::string::npos
                       ? what
                       : what + " (at offset " + std::to_string(position) + ")"),
        position(position) {}

  std::size_t position;
};

/// A tip label without a sampling date (or a date without a tip).
class MissingLabelError : public InputError {
public:
  explicit MissingLabelError(const std::string &label)
      : InputError("no sampling date for tip label '" + label + "'"),
        label(label) {}

  std::string label;
};

/// Invalid run configuration (unknown keys, wrong types, bad values).
class ConfigError : public InputError {
public:
  explicit ConfigError(const std::string &what) : InputError(what) {}
};

/// Numerical or algorithmic failure at run time (exit code 1).
class RuntimeError : public std::runtime_error {
public:
  explicit RuntimeError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace hsmrf
