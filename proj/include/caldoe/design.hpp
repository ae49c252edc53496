#pragma once

#include "caldoe/common.hpp"

#include <string>
#include <vector>

namespace caldoe {

enum class Role { DOpt, ExtremumMax, ExtremumMin, SpaceFill };

std::string role_name(Role role);
Role parse_role(const std::string& name);

/// Ordered points in [0,1]^p with a role and replicate group per point.
/// Points that share a group id are replicates of one location.
struct Design {
  PointSet points;
  std::vector<Role> roles;
  std::vector<int> groups;

  Design() = default;
  explicit Design(int dims) : points(0, dims) {}

  int size() const { return static_cast<int>(points.rows()); }
  int dims() const { return static_cast<int>(points.cols()); }

  void append(const Vector& point, Role role, int group);

  /// Appends all points of `other`, keeping their groups.
  void append(const Design& other);

  int count(Role role) const;

  /// Smallest id not used by any point.
  int next_group() const;

  /// Distinct locations (first point of each group, in order of appearance).
  PointSet unique_locations() const;
};

}  // namespace caldoe
