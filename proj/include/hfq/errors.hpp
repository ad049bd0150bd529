#pragma once

#include <stdexcept>
#include <string>

namespace hfq {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error { using Error::Error; };
struct DegeneracyError : Error { using Error::Error; };
struct BranchError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct IntegrationError : Error { using Error::Error; };
struct UnsupportedInput : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };

// carries the cutoff that would have been enough
struct CutoffError : Error {
  int required;
  CutoffError(const std::string& what, int req) : Error(what), required(req) {}
};

struct ConfigError : Error { using Error::Error; };

// model error raised while evaluating one k of a sweep
struct PointError : Error {
  int k;
  PointError(const std::string& what, int kk) : Error("k=" + std::to_string(kk) + ": " + what), k(kk) {}
};

}  // namespace hfq
