#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dmvfc {

// Shortest round-trip-exact decimal encoding of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

// Whitespace token stream over a text file. '#' starts a comment that runs to
// end of line. Keeps a line counter for error messages.
class TextReader {
 public:
  TextReader(const std::string& path, const std::string& label)
      : in_(path), label_(label) {
    if (!in_) throw std::runtime_error("not a dataset: cannot open " + path);
  }

  // label-only constructor for in-memory parsing in tests
  TextReader(std::istringstream&& stream, const std::string& label)
      : owned_(std::move(stream)), label_(label), use_owned_(true) {}

  bool next_token(std::string& out) {
    std::istream& in = use_owned_ ? static_cast<std::istream&>(owned_) : in_;
    out.clear();
    for (;;) {
      const int c = in.get();
      if (c == EOF) return !out.empty();
      if (c == '#') {
        if (!out.empty()) return true;
        while (in.good() && in.get() != '\n') {
        }
        ++line_;
        continue;
      }
      if (c == '\n') {
        ++line_;
        if (!out.empty()) return true;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!out.empty()) return true;
        continue;
      }
      out.push_back(char(c));
    }
  }

  std::string expect_token(const std::string& what) {
    std::string tok;
    if (!next_token(tok))
      throw std::runtime_error("format error: " + label_ + " line " +
                               std::to_string(line_) + ": expected " + what +
                               ", got end of file");
    return tok;
  }

  double expect_double(const std::string& what) {
    const std::string tok = expect_token(what);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw std::runtime_error("format error: " + label_ + " line " +
                               std::to_string(line_) + ": expected " + what +
                               ", got '" + tok + "'");
    return v;
  }

  long long expect_int(const std::string& what) {
    const std::string tok = expect_token(what);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw std::runtime_error("format error: " + label_ + " line " +
                               std::to_string(line_) + ": expected " + what +
                               ", got '" + tok + "'");
    return v;
  }

  void expect_literal(const std::string& want) {
    const std::string tok = expect_token("'" + want + "'");
    if (tok != want)
      throw std::runtime_error("format error: " + label_ + " line " +
                               std::to_string(line_) + ": expected '" + want +
                               "', got '" + tok + "'");
  }

  void expect_end() {
    std::string tok;
    if (next_token(tok))
      throw std::runtime_error("format error: " + label_ + " line " +
                               std::to_string(line_) +
                               ": unexpected trailing token '" + tok + "'");
  }

  int line() const { return line_; }
  const std::string& label() const { return label_; }

 private:
  std::ifstream in_;
  std::istringstream owned_;
  std::string label_;
  bool use_owned_ = false;
  int line_ = 1;
};

}  // namespace dmvfc
