#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace disco {

// %.17g, which round-trips every double exactly.
inline std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

// Minimal JSON emitter with caller-controlled key order. Non-finite numbers
// are written as null.
class JsonWriter {
 public:
  void begin_object() { open('{'); }
  void end_object() { close('}'); }
  void begin_array() { open('['); }
  void end_array() { close(']'); }

  void key(std::string_view name) {
    separate();
    if (depth_ == 1) out_ += "\n  ";
    string_literal(name);
    out_ += ':';
    pending_key_ = true;
  }

  void value(double v) {
    separate();
    out_ += std::isfinite(v) ? format_double(v) : "null";
  }
  void value(std::int64_t v) {
    separate();
    out_ += std::to_string(v);
  }
  void value(std::size_t v) {
    separate();
    out_ += std::to_string(v);
  }
  void value(bool v) {
    separate();
    out_ += v ? "true" : "false";
  }
  void value(std::string_view v) {
    separate();
    string_literal(v);
  }
  void value(const char* v) { value(std::string_view(v)); }

  template <typename T>
  void array(const std::vector<T>& values) {
    begin_array();
    for (const auto& v : values) value(v);
    end_array();
  }

  void array(const Eigen::VectorXd& values) {
    begin_array();
    for (Eigen::Index i = 0; i < values.size(); ++i) value(values(i));
    end_array();
  }

  // Row-major nested arrays.
  void matrix(const Eigen::MatrixXd& m) {
    begin_array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      begin_array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) value(m(r, c));
      end_array();
    }
    end_array();
  }

  template <typename T>
  void field(std::string_view name, const T& v) {
    key(name);
    if constexpr (std::is_same_v<T, Eigen::MatrixXd>) {
      matrix(v);
    } else if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
      array(v);
    } else if constexpr (requires { v.begin(); } && !std::is_convertible_v<T, std::string_view>) {
      array(v);
    } else {
      value(v);
    }
  }

  std::string str() const { return out_ + "\n"; }

 private:
  void open(char c) {
    separate();
    out_ += c;
    first_.push_back(true);
    ++depth_;
  }

  void close(char c) {
    --depth_;
    first_.pop_back();
    if (c == '}' && depth_ == 0) out_ += '\n';
    out_ += c;
  }

  void separate() {
    if (pending_key_) {
      pending_key_ = false;
      return;
    }
    if (!first_.empty()) {
      if (!first_.back()) out_ += ',';
      first_.back() = false;
    }
  }

  void string_literal(std::string_view s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        case '\r': out_ += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buffer[8];
            std::snprintf(buffer, sizeof buffer, "\\u%04x", c);
            out_ += buffer;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }

  std::string out_;
  std::vector<bool> first_;
  int depth_ = 0;
  bool pending_key_ = false;
};

}  // namespace disco
