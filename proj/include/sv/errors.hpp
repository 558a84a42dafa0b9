#ifndef SV_ERRORS_HPP
#define SV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sv {

// Every error raised by the library derives from sv::Error so callers can
// catch one type; the concrete class carries the category for the CLI's
// machine-readable error report.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define SV_DEFINE_ERROR(Name, tag)                          \
  class Name : public Error {                               \
   public:                                                  \
    using Error::Error;                                     \
    const char* kind() const noexcept override { return tag; } \
  }

SV_DEFINE_ERROR(InvalidParameter, "invalid-parameter");
SV_DEFINE_ERROR(UnsupportedDraw, "unsupported-draw");
SV_DEFINE_ERROR(InconsistentSpec, "inconsistent-spec");
SV_DEFINE_ERROR(NumericError, "numeric");
SV_DEFINE_ERROR(DataError, "data");
SV_DEFINE_ERROR(DimensionError, "dimension");
SV_DEFINE_ERROR(ConfigError, "config");

#undef SV_DEFINE_ERROR

/// Rethrows `e` as the same concrete type with `context` prefixed.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string msg = context + ": " + e.what();
  if (dynamic_cast<const InvalidParameter*>(&e)) throw InvalidParameter(msg);
  if (dynamic_cast<const UnsupportedDraw*>(&e)) throw UnsupportedDraw(msg);
  if (dynamic_cast<const InconsistentSpec*>(&e)) throw InconsistentSpec(msg);
  if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
  if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
  if (dynamic_cast<const DimensionError*>(&e)) throw DimensionError(msg);
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  throw Error(msg);
}

}  // namespace sv

#endif  // SV_ERRORS_HPP
