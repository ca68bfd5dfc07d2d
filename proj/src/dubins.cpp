#include "icenav/dubins.hpp"

#include <cmath>
#include <limits>

namespace icenav {

namespace {

constexpr double kEps = 1e-12;

double mod2pi(double a) { return wrap_to_2pi(a); }

struct Word {
  std::array<DubinsSegment, 3> segs;
  std::array<double, 3> t;  // normalized lengths (arcs in radians, S in r units)
  bool ok = false;
};

// Normalized problem: start at origin heading alpha, end at (d, 0) heading beta.
Word lsl(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Left, DubinsSegment::Straight, DubinsSegment::Left}, {}, false};
  const double tmp = d + std::sin(alpha) - std::sin(beta);
  const double p2 = 2 + d * d - 2 * std::cos(alpha - beta) + 2 * d * (std::sin(alpha) - std::sin(beta));
  if (p2 < -1e-9) return w;
  const double th = std::atan2(std::cos(beta) - std::cos(alpha), tmp);
  w.t = {mod2pi(th - alpha), std::sqrt(std::max(0.0, p2)), mod2pi(beta - th)};
  w.ok = true;
  return w;
}

Word rsr(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Right, DubinsSegment::Straight, DubinsSegment::Right}, {}, false};
  const double tmp = d - std::sin(alpha) + std::sin(beta);
  const double p2 = 2 + d * d - 2 * std::cos(alpha - beta) + 2 * d * (std::sin(beta) - std::sin(alpha));
  if (p2 < -1e-9) return w;
  const double th = std::atan2(std::cos(alpha) - std::cos(beta), tmp);
  w.t = {mod2pi(alpha - th), std::sqrt(std::max(0.0, p2)), mod2pi(th - beta)};
  w.ok = true;
  return w;
}

Word lsr(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Left, DubinsSegment::Straight, DubinsSegment::Right}, {}, false};
  const double p2 = -2 + d * d + 2 * std::cos(alpha - beta) + 2 * d * (std::sin(alpha) + std::sin(beta));
  if (p2 < -1e-9) return w;
  const double p = std::sqrt(std::max(0.0, p2));
  const double th = std::atan2(-std::cos(alpha) - std::cos(beta), d + std::sin(alpha) + std::sin(beta)) -
                    std::atan2(-2.0, p);
  w.t = {mod2pi(th - alpha), p, mod2pi(th - beta)};
  w.ok = true;
  return w;
}

Word rsl(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Right, DubinsSegment::Straight, DubinsSegment::Left}, {}, false};
  const double p2 = -2 + d * d + 2 * std::cos(alpha - beta) - 2 * d * (std::sin(alpha) + std::sin(beta));
  if (p2 < -1e-9) return w;
  const double p = std::sqrt(std::max(0.0, p2));
  const double th = std::atan2(std::cos(alpha) + std::cos(beta), d - std::sin(alpha) - std::sin(beta)) -
                    std::atan2(2.0, p);
  w.t = {mod2pi(alpha - th), p, mod2pi(beta - th)};
  w.ok = true;
  return w;
}

Word rlr(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Right, DubinsSegment::Left, DubinsSegment::Right}, {}, false};
  const double tmp = (6.0 - d * d + 2 * std::cos(alpha - beta) + 2 * d * (std::sin(alpha) - std::sin(beta))) / 8.0;
  if (std::fabs(tmp) > 1.0) return w;
  const double p = mod2pi(kTwoPi - std::acos(tmp));
  const double th = std::atan2(std::cos(alpha) - std::cos(beta), d - std::sin(alpha) + std::sin(beta));
  const double t = mod2pi(alpha - th + p / 2.0);
  w.t = {t, p, mod2pi(alpha - beta - t + p)};
  w.ok = true;
  return w;
}

Word lrl(double alpha, double beta, double d) {
  Word w{{DubinsSegment::Left, DubinsSegment::Right, DubinsSegment::Left}, {}, false};
  const double tmp = (6.0 - d * d + 2 * std::cos(alpha - beta) + 2 * d * (std::sin(beta) - std::sin(alpha))) / 8.0;
  if (std::fabs(tmp) > 1.0) return w;
  const double p = mod2pi(kTwoPi - std::acos(tmp));
  const double th = std::atan2(std::cos(beta) - std::cos(alpha), d + std::sin(alpha) - std::sin(beta));
  const double t = mod2pi(-alpha + th + p / 2.0);
  w.t = {t, p, mod2pi(beta - alpha - t + p)};
  w.ok = true;
  return w;
}

Pose step_segment(const Pose& p, DubinsSegment seg, double s, double r) {
  switch (seg) {
    case DubinsSegment::Straight:
      return Pose(p.x + s * std::cos(p.psi), p.y + s * std::sin(p.psi), p.psi);
    case DubinsSegment::Left: {
      const double dpsi = s / r;
      return Pose(p.x + r * (std::sin(p.psi + dpsi) - std::sin(p.psi)),
                  p.y + r * (-std::cos(p.psi + dpsi) + std::cos(p.psi)), p.psi + dpsi);
    }
    case DubinsSegment::Right: {
      const double dpsi = -s / r;
      return Pose(p.x + r * (std::sin(p.psi) - std::sin(p.psi + dpsi)),
                  p.y + r * (std::cos(p.psi + dpsi) - std::cos(p.psi)), p.psi + dpsi);
    }
  }
  return p;
}

}  // namespace

Pose DubinsPath::at(double s) const {
  Pose p = start;
  for (int i = 0; i < 3; ++i) {
    const double seg_len = lengths[i];
    if (s <= seg_len + kEps) return step_segment(p, segments[i], std::max(0.0, s), radius);
    p = step_segment(p, segments[i], seg_len, radius);
    s -= seg_len;
  }
  return p;
}

std::vector<Pose> DubinsPath::sample(double ds) const {
  const double L = total_length();
  const int n = std::max(1, static_cast<int>(std::ceil(L / ds)));
  std::vector<Pose> out;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) out.push_back(at(L * i / n));
  return out;
}

std::optional<DubinsPath> dubins_shortest_path(const Pose& a, const Pose& b, double r) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  if (!std::isfinite(dx) || !std::isfinite(dy) || !(r > 0)) return std::nullopt;
  const double D = std::hypot(dx, dy);
  const double d = D / r;
  const double theta = (D > kEps) ? std::atan2(dy, dx) : 0.0;
  const double alpha = mod2pi(a.psi - theta);
  const double beta = mod2pi(b.psi - theta);

  Word words[6] = {lsl(alpha, beta, d), rsr(alpha, beta, d), lsr(alpha, beta, d),
                   rsl(alpha, beta, d), rlr(alpha, beta, d), lrl(alpha, beta, d)};
  const Word* best = nullptr;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& w : words) {
    if (!w.ok) continue;
    const double len = w.t[0] + w.t[1] + w.t[2];
    if (len < best_len) {
      best_len = len;
      best = &w;
    }
  }
  if (!best) return std::nullopt;
  DubinsPath path;
  path.start = a;
  path.radius = r;
  path.segments = best->segs;
  for (int i = 0; i < 3; ++i) {
    // Straight segments are normalized by r as well in the formulas above.
    path.lengths[i] = best->t[i] * r;
  }
  return path;
}

}  // namespace icenav
