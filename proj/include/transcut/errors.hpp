#pragma once

#include <stdexcept>
#include <string>

namespace transcut {

/// Base of every data error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or scene spec (usage-level error).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  ManifestError(const std::string& msg, int line)
      : Error(line > 0 ? "manifest line " + std::to_string(line) + ": " + msg : "manifest: " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class MissingView : public Error {
 public:
  MissingView(double s, double t, const std::string& detail)
      : Error("missing view (" + fmt(s) + "," + fmt(t) + "): " + detail), s(s), t(t) {}
  double s;
  double t;

 private:
  static std::string fmt(double v) {
    auto str = std::to_string(v);
    str.erase(str.find_last_not_of('0') + 1);
    if (!str.empty() && str.back() == '.') str.pop_back();
    return str;
  }
};

class DuplicateViewpoint : public Error {
 public:
  using Error::Error;
};

class ImageSizeMismatch : public Error {
 public:
  using Error::Error;
};

class ImageIoError : public Error {
 public:
  using Error::Error;
};

class FlowFormatError : public Error {
 public:
  enum class Kind { BadMagic, Truncated, BadHeader, Io };
  FlowFormatError(Kind kind, const std::string& msg) : Error(msg), kind(kind) {}
  Kind kind;
};

class FlowSourceMissing : public Error {
 public:
  using Error::Error;
};

}  // namespace transcut
