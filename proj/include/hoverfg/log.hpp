// Copyright 2026 The hoverfg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-delimited sensor and truth logs (".fjl").
//
//   # comment / metadata line
//   <t> IMU   <dt> <ax> <ay> <az> <gx> <gy> <gz>
//   <t> RANGE <meters>
//   <t> ALT   <altitude m>
//   <t> POSE  <qw> <qx> <qy> <qz> <n> <e> <d>
//   <t> UGV   <n> <e> <d>
//   <t> VEL   <vn> <ve> <vd>
//   <t> HOVER <1 = enter | 0 = exit>
//
// Truth files use a single kind:
//   <t> TRUTH <qw> <qx> <qy> <qz> <n> <e> <d> <vn> <ve> <vd>
//             <ba x3> <bg x3> <ugv n> <ugv e> <ugv d>
//
// Numbers are written with 17 significant digits so that reading a written
// file reproduces every double exactly.

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoverfg/sim.hpp"

namespace hoverfg {

class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, " %.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_vec(std::string& out, const Vec3& v) {
  for (int i = 0; i < 3; ++i) append_number(out, v[i]);
}

inline void append_rotation(std::string& out, const Rotation3& r) {
  append_number(out, r.w());
  append_number(out, r.x());
  append_number(out, r.y());
  append_number(out, r.z());
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

class FieldReader {
 public:
  FieldReader(const std::string& path, long line,
              std::vector<std::string_view> fields)
      : path_(path), line_(line), fields_(std::move(fields)) {}

  double number(std::size_t i) const {
    if (i >= fields_.size()) fail("too few fields");
    const std::string_view f = fields_[i];
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
      fail("malformed number '" + std::string(f) + "'");
    }
    return v;
  }

  Vec3 vec(std::size_t i) const {
    return {number(i), number(i + 1), number(i + 2)};
  }

  Rotation3 rotation(std::size_t i) const {
    return Rotation3::from_unit_quaternion(Eigen::Quaterniond(
        number(i), number(i + 1), number(i + 2), number(i + 3)));
  }

  void expect_count(std::size_t n) const {
    if (fields_.size() != n) {
      fail("expected " + std::to_string(n) + " fields, got " +
           std::to_string(fields_.size()));
    }
  }

  std::string_view kind() const {
    if (fields_.size() < 2) fail("missing record kind");
    return fields_[1];
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw LogFormatError(path_, line_, what);
  }

 private:
  const std::string& path_;
  long line_;
  std::vector<std::string_view> fields_;
};

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

inline std::string format_record(const SensorRecord& r) {
  std::string line;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", r.timestamp);
  line = buf;
  std::visit(
      [&line](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ImuPayload>) {
          line += " IMU";
          detail::append_number(line, p.sample.dt);
          detail::append_vec(line, p.sample.accel);
          detail::append_vec(line, p.sample.gyro);
        } else if constexpr (std::is_same_v<T, RangePayload>) {
          line += " RANGE";
          detail::append_number(line, p.range);
        } else if constexpr (std::is_same_v<T, AltimeterPayload>) {
          line += " ALT";
          detail::append_number(line, p.altitude);
        } else if constexpr (std::is_same_v<T, PosePriorPayload>) {
          line += " POSE";
          detail::append_rotation(line, p.pose.rotation);
          detail::append_vec(line, p.pose.translation);
        } else if constexpr (std::is_same_v<T, UgvPosePayload>) {
          line += " UGV";
          detail::append_vec(line, p.position);
        } else if constexpr (std::is_same_v<T, VelocityPayload>) {
          line += " VEL";
          detail::append_vec(line, p.velocity);
        } else {
          line += p.entering ? " HOVER 1" : " HOVER 0";
        }
      },
      r.payload);
  return line;
}

/// Writes records (must be sorted by timestamp). `header` lines are emitted
/// as '#' comments; a header line starting with "config " carries the
/// scenario configuration as JSON.
inline void write_log(const std::vector<SensorRecord>& records,
                      const std::string& path,
                      const std::vector<std::string>& header = {}) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp < records[i - 1].timestamp) {
      throw std::invalid_argument("write_log: records are not sorted");
    }
  }
  std::ofstream out = detail::open_for_write(path);
  out << "# hoverfg sensor log v1\n";
  for (const std::string& h : header) out << "# " << h << '\n';
  for (const SensorRecord& r : records) out << format_record(r) << '\n';
  if (!out) throw std::runtime_error("write_log: failed writing '" + path + "'");
}

struct LogContents {
  std::vector<SensorRecord> records;
  std::vector<std::string> header;  // comment lines without the leading "# "
};

inline LogContents read_log_with_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log '" + path + "'");
  LogContents out;
  std::string line;
  long line_no = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      if (!body.empty() && body[0] == ' ') body.remove_prefix(1);
      out.header.emplace_back(body);
      continue;
    }
    const detail::FieldReader f(path, line_no, detail::split_fields(line));
    SensorRecord r;
    r.timestamp = f.number(0);
    const std::string_view kind = f.kind();
    if (kind == "IMU") {
      f.expect_count(9);
      ImuSample s;
      s.dt = f.number(2);
      s.accel = f.vec(3);
      s.gyro = f.vec(6);
      r.payload = ImuPayload{s};
    } else if (kind == "RANGE") {
      f.expect_count(3);
      r.payload = RangePayload{f.number(2)};
    } else if (kind == "ALT") {
      f.expect_count(3);
      r.payload = AltimeterPayload{f.number(2)};
    } else if (kind == "POSE") {
      f.expect_count(9);
      r.payload = PosePriorPayload{Pose3{f.rotation(2), f.vec(6)}};
    } else if (kind == "UGV") {
      f.expect_count(5);
      r.payload = UgvPosePayload{f.vec(2)};
    } else if (kind == "VEL") {
      f.expect_count(5);
      r.payload = VelocityPayload{f.vec(2)};
    } else if (kind == "HOVER") {
      f.expect_count(3);
      const double flag = f.number(2);
      if (flag != 0.0 && flag != 1.0) f.fail("hover flag must be 0 or 1");
      r.payload = HoverFlagPayload{flag == 1.0};
    } else {
      f.fail("unknown record kind '" + std::string(kind) + "'");
    }
    if (r.timestamp < last_t) f.fail("timestamps are not sorted");
    last_t = r.timestamp;
    out.records.push_back(std::move(r));
  }
  return out;
}

inline std::vector<SensorRecord> read_log(const std::string& path) {
  return read_log_with_header(path).records;
}

/// Returns the JSON payload of a "config ..." header line, if any.
inline std::optional<std::string> header_config(
    const std::vector<std::string>& header) {
  for (const std::string& h : header) {
    if (h.rfind("config ", 0) == 0) return h.substr(7);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Truth files
// ---------------------------------------------------------------------------

inline void write_truth(const std::vector<TruthEpoch>& epochs,
                        const std::string& path,
                        const std::vector<std::string>& header = {}) {
  std::ofstream out = detail::open_for_write(path);
  out << "# hoverfg truth v1\n";
  for (const std::string& h : header) out << "# " << h << '\n';
  std::string line;
  for (const TruthEpoch& e : epochs) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", e.t);
    line = buf;
    line += " TRUTH";
    detail::append_rotation(line, e.uav.pose.rotation);
    detail::append_vec(line, e.uav.pose.translation);
    detail::append_vec(line, e.uav.velocity);
    detail::append_vec(line, e.uav.bias_accel);
    detail::append_vec(line, e.uav.bias_gyro);
    detail::append_vec(line, e.ugv);
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("write_truth: failed writing '" + path + "'");
}

inline std::vector<TruthEpoch> read_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open truth file '" + path + "'");
  std::vector<TruthEpoch> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const detail::FieldReader f(path, line_no, detail::split_fields(line));
    if (f.kind() != "TRUTH") f.fail("expected a TRUTH record");
    f.expect_count(21);
    TruthEpoch e;
    e.t = f.number(0);
    e.uav.pose.rotation = f.rotation(2);
    e.uav.pose.translation = f.vec(6);
    e.uav.velocity = f.vec(9);
    e.uav.bias_accel = f.vec(12);
    e.uav.bias_gyro = f.vec(15);
    e.ugv = f.vec(18);
    if (!out.empty() && !(e.t > out.back().t)) {
      f.fail("truth timestamps must be strictly increasing");
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace hoverfg
