#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "oag/core.hpp"

namespace oag::detail {

// Reads non-comment lines and reports parse errors with their line number.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line that is not blank and does not start with '#'. With
  // `allow_blank`, blank lines are returned too (used for possibly-empty
  // fields).
  bool next(std::string& line, bool allow_blank = false) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '#') continue;
      if (first == std::string::npos && !allow_blank) continue;
      return true;
    }
    return false;
  }

  std::string require(const char* what, bool allow_blank = false) {
    std::string line;
    if (!next(line, allow_blank)) fail(std::string("unexpected end of input, expected ") + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no_) + ": " + message);
  }

  int line_no() const { return line_no_; }

  template <typename T>
  std::vector<T> parse_all(const std::string& text, const char* what) const {
    std::istringstream ss(text);
    std::vector<T> out;
    std::string token;
    while (ss >> token) out.push_back(parse_one<T>(token, what));
    return out;
  }

  template <typename T>
  T parse_one(const std::string& token, const char* what) const {
    std::istringstream ts(token);
    T value{};
    char extra = 0;
    if (!(ts >> value) || (ts >> extra)) fail(std::string("bad ") + what + " '" + token + "'");
    return value;
  }

  bool at_end() {
    std::string line;
    return !next(line);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace oag::detail
