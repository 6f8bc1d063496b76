#include "hdgstokes/mms.hpp"

#include <cmath>

namespace hdgstokes {

MmsSolution make_sine_mms() {
  const double pi = M_PI;
  MmsSolution mms;
  mms.domain = Rect{0.0, 0.0, 1.0, 1.0};
  mms.velocity = [pi](const Vec2& x) {
    return Vec2(pi * std::sin(pi * x(0)) * std::cos(pi * x(1)),
                -pi * std::cos(pi * x(0)) * std::sin(pi * x(1)));
  };
  mms.pressure = [pi](const Vec2& x) {
    return std::sin(pi * x(0)) * std::sin(pi * x(1)) - 4.0 / (pi * pi);
  };
  mms.body_force = [pi](const Vec2& x) {
    const double sx = std::sin(pi * x(0)), cx = std::cos(pi * x(0));
    const double sy = std::sin(pi * x(1)), cy = std::cos(pi * x(1));
    return Vec2(2.0 * pi * pi * pi * sx * cy + pi * cx * sy,
                -2.0 * pi * pi * pi * cx * sy + pi * sx * cy);
  };
  return mms;
}

CavityProblem make_lid_driven_cavity() {
  CavityProblem cavity;
  cavity.domain = Rect{-1.0, -1.0, 1.0, 1.0};
  cavity.boundary_velocity = [](const Vec2& x) {
    if (x(1) >= 1.0 - 1e-12) {
      const double x2 = x(0) * x(0);
      return Vec2(1.0 - x2 * x2, 0.0);
    }
    return Vec2(0.0, 0.0);
  };
  return cavity;
}

}  // namespace hdgstokes
