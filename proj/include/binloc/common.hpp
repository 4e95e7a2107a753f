// Copyright 2026 The binloc Authors.
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

#ifndef BINLOC_COMMON_HPP
#define BINLOC_COMMON_HPP

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace binloc {

static_assert(std::endian::native == std::endian::little,
              "binary file formats are little-endian; big-endian hosts are unsupported");

/// Base class for all errors thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unreadable files, unsupported encodings.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// Violated preconditions or invalid configuration values.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// Wrap an angle into [0, 360).
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  // fmod of a tiny negative can land exactly on 360 after the adjustment
  if (w >= 360.0) w = 0.0;
  return w;
}

/// Shortest angular distance between two azimuths, in [0, 180].
inline double angular_distance(double a_deg, double b_deg) {
  double d = std::fabs(wrap_degrees(a_deg) - wrap_degrees(b_deg));
  return d > 180.0 ? 360.0 - d : d;
}

/// Front-back mirror of an azimuth: the direction producing the same ITD in
/// the opposite hemifield for a left-right symmetric head.
inline double mirror_azimuth(double az_deg) { return wrap_degrees(180.0 - az_deg); }

constexpr double kPi = 3.14159265358979323846;

}  // namespace binloc

#endif  // BINLOC_COMMON_HPP
