#ifndef HTMETA_COMMON_HPP
#define HTMETA_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace htmeta {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- error types -----------------------------------------------------------

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string &what) : std::runtime_error(what) {}
};

struct NoConvergenceError : std::runtime_error {
  explicit NoConvergenceError(const std::string &what) : std::runtime_error(what) {}
};

struct UnsupportedError : std::runtime_error {
  explicit UnsupportedError(const std::string &what) : std::runtime_error(what) {}
};

struct DegenerateThresholdError : std::runtime_error {
  explicit DegenerateThresholdError(const std::string &what) : std::runtime_error(what) {}
};

struct UnboundedFieldError : std::runtime_error {
  explicit UnboundedFieldError(const std::string &what) : std::runtime_error(what) {}
};

struct DegenerateGeometryError : std::runtime_error {
  explicit DegenerateGeometryError(const std::string &what) : std::runtime_error(what) {}
};

struct RateSumMismatchError : std::runtime_error {
  explicit RateSumMismatchError(const std::string &what) : std::runtime_error(what) {}
};

struct SingularSystemError : std::runtime_error {
  explicit SingularSystemError(const std::string &what) : std::runtime_error(what) {}
};

struct HorizonExceededError : std::runtime_error {
  explicit HorizonExceededError(const std::string &what) : std::runtime_error(what) {}
};

struct InsufficientEventsError : std::runtime_error {
  explicit InsufficientEventsError(const std::string &what) : std::runtime_error(what) {}
};

struct InsufficientInputError : std::runtime_error {
  explicit InsufficientInputError(const std::string &what) : std::runtime_error(what) {}
};

struct OutOfHorizonError : std::runtime_error {
  explicit OutOfHorizonError(const std::string &what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

// ---- small vector helpers ---------------------------------------------------

inline double norm2(const Vec &v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dist2(const Vec &a, const Vec &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(const Vec &v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Vec axpy(double a, const Vec &x, const Vec &y) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + y[i];
  return r;
}

inline double sq(double x) { return x * x; }

} // namespace htmeta

#endif
