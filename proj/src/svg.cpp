#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bta/experiments.hpp"

namespace bta {

namespace {

constexpr int kCell = 32;

std::string heat_colour(double t) {
  // dark blue -> teal -> yellow
  t = std::clamp(t, 0.0, 1.0);
  const double r = t < 0.5 ? 30 + t * 2 * 20 : 50 + (t - 0.5) * 2 * 200;
  const double g = t < 0.5 ? 40 + t * 2 * 120 : 160 + (t - 0.5) * 2 * 70;
  const double b = t < 0.5 ? 120 + t * 2 * 30 : 150 - (t - 0.5) * 2 * 110;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r), static_cast<int>(g), static_cast<int>(b));
  return buf;
}

}  // namespace

std::string render_svg(const GridWorld& world, const Eigen::ArrayXd& values, const std::vector<Action>& policy,
                       const std::string& title) {
  const int w = world.width() * kCell;
  const int h = world.height() * kCell + 24;
  // Values far below the rest (r_bar_min territory) would wash out the scale.
  double lo = values.maxCoeff(), hi = values.maxCoeff();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) > -10.0) lo = std::min(lo, values(i));
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
  svg << "<text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"14\">" << title << "</text>\n";
  for (int r = 0; r < world.height(); ++r) {
    for (int c = 0; c < world.width(); ++c) {
      const int x = c * kCell;
      const int y = 24 + r * kCell;
      const auto s = world.state_of({r, c});
      if (!s) {
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
            << "\" fill=\"#333333\"/>\n";
        continue;
      }
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
          << heat_colour((values(*s) - lo) / span) << "\" stroke=\"#222222\" stroke-width=\"0.5\"/>\n";
      const double cx = x + kCell / 2.0;
      const double cy = y + kCell / 2.0;
      if (world.goal_index(*s) >= 0) {
        svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << kCell * 0.4
            << "\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"2\"/>\n";
      }
      if (policy.empty()) continue;
      const Action a = policy[static_cast<std::size_t>(*s)];
      if (a == Action::Stay) {
        svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"4\" fill=\"#000000\"/>\n";
        continue;
      }
      const double len = kCell * 0.3;
      double dx = 0, dy = 0;
      switch (a) {
        case Action::North: dy = -len; break;
        case Action::South: dy = len; break;
        case Action::East: dx = len; break;
        case Action::West: dx = -len; break;
        default: break;
      }
      svg << "<line x1=\"" << cx - dx << "\" y1=\"" << cy - dy << "\" x2=\"" << cx + dx << "\" y2=\"" << cy + dy
          << "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
      svg << "<circle cx=\"" << cx + dx << "\" cy=\"" << cy + dy << "\" r=\"3\" fill=\"#000000\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace bta
