#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bateman/error.hpp"

namespace bateman {

using Complex = std::complex<double>;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

/// Named columns of doubles, all the same length. Header row always written.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  void add(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != rows()) {
      throw Error(ErrorKind::kShapeMismatch, "column '" + name + "' has " +
                                                 std::to_string(values.size()) +
                                                 " rows, table has " +
                                                 std::to_string(rows()));
    }
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return columns[i];
    }
    throw Error(ErrorKind::kShapeMismatch, "no column named '" + std::string(name) + "'");
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) os << ',';
      os << header[c];
    }
    os << '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) os << ',';
        os << format_double(columns[c][r]);
      }
      os << '\n';
    }
  }
};

/// Uniform time grid t_i = t0 + i dt with named real or complex channels.
class TimeSeries {
 public:
  using Channel = std::variant<std::vector<double>, std::vector<Complex>>;

  TimeSeries() = default;
  TimeSeries(double t0, double dt, std::size_t size) : t0_(t0), dt_(dt), size_(size) {}

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return size_; }
  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }

  std::vector<double> times() const {
    std::vector<double> out(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = time(i);
    return out;
  }

  void add_real(std::string name, std::vector<double> values) {
    check_length(name, values.size());
    names_.push_back(std::move(name));
    channels_.emplace_back(std::move(values));
  }

  void add_complex(std::string name, std::vector<Complex> values) {
    check_length(name, values.size());
    names_.push_back(std::move(name));
    channels_.emplace_back(std::move(values));
  }

  const std::vector<std::string>& names() const { return names_; }

  bool has(std::string_view name) const {
    for (const auto& n : names_) {
      if (n == name) return true;
    }
    return false;
  }

  const std::vector<double>& real(std::string_view name) const {
    return std::get<std::vector<double>>(find(name));
  }

  const std::vector<Complex>& complex(std::string_view name) const {
    return std::get<std::vector<Complex>>(find(name));
  }

  /// Flattens to a table with a leading "t" column; complex channels become
  /// name_re, name_im.
  Table to_table() const {
    Table table;
    table.add("t", times());
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (const auto* re = std::get_if<std::vector<double>>(&channels_[c])) {
        table.add(names_[c], *re);
      } else {
        const auto& z = std::get<std::vector<Complex>>(channels_[c]);
        std::vector<double> re_part(z.size()), im_part(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          re_part[i] = z[i].real();
          im_part[i] = z[i].imag();
        }
        table.add(names_[c] + "_re", std::move(re_part));
        table.add(names_[c] + "_im", std::move(im_part));
      }
    }
    return table;
  }

 private:
  void check_length(const std::string& name, std::size_t n) const {
    if (n != size_) {
      throw Error(ErrorKind::kShapeMismatch, "channel '" + name + "' has " +
                                                 std::to_string(n) + " samples, grid has " +
                                                 std::to_string(size_));
    }
  }

  const Channel& find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return channels_[i];
    }
    throw Error(ErrorKind::kShapeMismatch, "no channel named '" + std::string(name) + "'");
  }

  double t0_ = 0.0;
  double dt_ = 0.0;
  std::size_t size_ = 0;
  std::vector<std::string> names_;
  std::vector<Channel> channels_;
};

}  // namespace bateman
