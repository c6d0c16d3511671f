#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ppk {

enum class ErrorKind {
  InvalidArgument,
  InvalidMesh,
  Resource,
  NoClosedForm,
  Divergence,
  SingularSystem,
  PsdViolation,
  Config,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the numerical pipeline (as opposed to bad input).
  bool numerical() const noexcept {
    return kind_ == ErrorKind::Divergence || kind_ == ErrorKind::SingularSystem ||
           kind_ == ErrorKind::PsdViolation;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

/// Warnings collected along a computation; surfaced in run manifests.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  void merge(const Diagnostics& other) {
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  }
  bool empty() const noexcept { return warnings.empty(); }
};

}  // namespace ppk
