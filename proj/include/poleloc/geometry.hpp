#pragma once

#include <cmath>

namespace poleloc {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * kPi);
  if (w <= -kPi) w = kPi;
  return w;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// SE(2) pose: position in meters, heading in radians, wrapped to (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// a then b: applies increment b in the frame of a.
inline Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return Pose2{a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
               wrap_angle(a.theta + b.theta)};
}

// Increment taking `from` to `to`, expressed in the frame of `from`.
inline Pose2 relative(const Pose2& from, const Pose2& to) {
  const double c = std::cos(from.theta);
  const double s = std::sin(from.theta);
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  return Pose2{c * dx + s * dy, -s * dx + c * dy,
               wrap_angle(to.theta - from.theta)};
}

// Maps a point from the pose's local frame into the world frame.
inline Vec2 transform_point(const Pose2& pose, double px, double py) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return Vec2{pose.x + c * px - s * py, pose.y + s * px + c * py};
}

// Maps a world point into the pose's local frame.
inline Vec2 inverse_transform_point(const Pose2& pose, double wx, double wy) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double dx = wx - pose.x;
  const double dy = wy - pose.y;
  return Vec2{c * dx + s * dy, -s * dx + c * dy};
}

inline double distance2d(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

// Circle landmark model: center in meters, radius in meters.
struct Circle {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
};

}  // namespace poleloc
