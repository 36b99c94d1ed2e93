#pragma once

#include <charconv>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>

namespace wloja {

using Index = Eigen::Index;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid data handed to a constructor (measures, potentials, kernels).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A time integrator produced an inadmissible state.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, long step = -1)
      : Error(what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Malformed experiment configuration; carries the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

using WarningHandler = std::function<void(std::string_view)>;

namespace detail {

struct WarningSink {
  std::mutex mutex;
  WarningHandler handler;
};

inline WarningSink& warning_sink() {
  static WarningSink sink;
  return sink;
}

}  // namespace detail

/// Installs a process-wide warning handler and returns the previous one.
/// An empty handler restores the default (stderr).
inline WarningHandler set_warning_handler(WarningHandler handler) {
  auto& sink = detail::warning_sink();
  std::lock_guard lock(sink.mutex);
  std::swap(sink.handler, handler);
  return handler;
}

inline void warn(std::string_view message) {
  auto& sink = detail::warning_sink();
  std::lock_guard lock(sink.mutex);
  if (sink.handler) {
    sink.handler(message);
  } else {
    std::cerr << "wloja: warning: " << message << '\n';
  }
}

/// Decimal text with 17 significant digits (the on-disk number format).
template <typename Scalar>
std::string format_real(Scalar value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

template <typename Scalar>
constexpr Scalar infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

}  // namespace wloja
