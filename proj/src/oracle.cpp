#include "evopath/oracle.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace evopath {

MaximinPath landscape_oracle(const LandscapeConfig& cfg, int resolution) {
  cfg.validate();
  if (cfg.dim > 3) throw UnsupportedError("landscape oracle supports D <= 3 only");
  if (resolution < 2) throw PreconditionError("landscape oracle needs resolution >= 2");

  const int d = cfg.dim;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= resolution;

  auto coords = [&](long node) {
    Vec a(d);
    for (int i = 0; i < d; ++i) {
      a[i] = static_cast<double>(node % resolution) / (resolution - 1);
      node /= resolution;
    }
    return a;
  };
  std::vector<double> value(total);
  for (long node = 0; node < total; ++node) value[node] = landscape_value(coords(node), cfg);

  // Bottleneck Dijkstra: best[v] = largest achievable path minimum reaching v.
  const double kUnset = -std::numeric_limits<double>::infinity();
  std::vector<double> best(total, kUnset);
  std::vector<long> parent(total, -1);
  std::vector<char> settled(total, 0);
  using Entry = std::pair<double, long>;
  std::priority_queue<Entry> frontier;  // max-heap on bottleneck, ties by larger index
  best[0] = value[0];
  frontier.push({best[0], 0});
  const long goal = total - 1;

  while (!frontier.empty()) {
    auto [b, node] = frontier.top();
    frontier.pop();
    if (settled[node]) continue;
    settled[node] = 1;
    if (node == goal) break;
    long stride = 1;
    long rest = node;
    for (int axis = 0; axis < d; ++axis, stride *= resolution) {
      const long coord = rest % resolution;
      rest /= resolution;
      for (int dir : {-1, 1}) {
        const long c = coord + dir;
        if (c < 0 || c >= resolution) continue;
        const long next = node + dir * stride;
        if (settled[next]) continue;
        const double cand = std::min(b, value[next]);
        if (cand > best[next]) {
          best[next] = cand;
          parent[next] = node;
          frontier.push({cand, next});
        }
      }
    }
  }

  MaximinPath out;
  out.maximin_value = best[goal];
  for (long node = goal; node != -1; node = parent[node]) out.path.push_back(coords(node));
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

double min_value_along(const std::vector<Vec>& points, const LandscapeConfig& cfg) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : points) m = std::min(m, landscape_value(p, cfg));
  return m;
}

}  // namespace evopath
