#include "caldoe/design.hpp"

#include <algorithm>
#include <set>

namespace caldoe {

std::string role_name(Role role) {
  switch (role) {
    case Role::DOpt: return "DOPT";
    case Role::ExtremumMax: return "EXTREMUM_MAX";
    case Role::ExtremumMin: return "EXTREMUM_MIN";
    case Role::SpaceFill: return "SPACEFILL";
  }
  return "?";
}

Role parse_role(const std::string& name) {
  if (name == "DOPT") return Role::DOpt;
  if (name == "EXTREMUM_MAX") return Role::ExtremumMax;
  if (name == "EXTREMUM_MIN") return Role::ExtremumMin;
  if (name == "SPACEFILL") return Role::SpaceFill;
  throw ValidationError("unknown design role '" + name + "'");
}

void Design::append(const Vector& point, Role role, int group) {
  if (points.cols() == 0 && points.rows() == 0) points.resize(0, point.size());
  if (point.size() != points.cols()) throw ValidationError("design point has the wrong dimension");
  points.conservativeResize(points.rows() + 1, Eigen::NoChange);
  points.row(points.rows() - 1) = point.transpose();
  roles.push_back(role);
  groups.push_back(group);
}

void Design::append(const Design& other) {
  for (int i = 0; i < other.size(); ++i) append(other.points.row(i).transpose(), other.roles[i], other.groups[i]);
}

int Design::count(Role role) const {
  return static_cast<int>(std::count(roles.begin(), roles.end(), role));
}

int Design::next_group() const {
  int next = 0;
  for (int g : groups) next = std::max(next, g + 1);
  return next;
}

PointSet Design::unique_locations() const {
  std::set<int> seen;
  std::vector<int> rows;
  for (int i = 0; i < size(); ++i) {
    if (seen.insert(groups[i]).second) rows.push_back(i);
  }
  PointSet out(static_cast<Eigen::Index>(rows.size()), dims());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points.row(rows[k]);
  return out;
}

}  // namespace caldoe
