#ifndef CONICAM_ERRORS_HPP
#define CONICAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace conicam {

/// Broad failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
  degenerate,    ///< geometry is degenerate or outside an operation's domain
  precondition,  ///< an input violates a documented contract
  estimation,    ///< a robust estimator could not produce a result
  schema         ///< malformed input file
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorKind::degenerate, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::precondition, what) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what)
      : Error(ErrorKind::estimation, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(ErrorKind::schema, what) {}
};

}  // namespace conicam

#endif  // CONICAM_ERRORS_HPP
