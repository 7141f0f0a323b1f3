#include "perfolab/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace perfolab {

PointD::PointD(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDimension) throw std::invalid_argument("PointD: unsupported dimension");
}

PointD::PointD(std::initializer_list<double> coords) : PointD(std::span<const double>(coords.begin(), coords.size())) {}

PointD::PointD(std::span<const double> coords) : dim_(static_cast<int>(coords.size())) {
  if (dim_ < 1 || dim_ > kMaxDimension) throw std::invalid_argument("PointD: unsupported dimension");
  std::copy(coords.begin(), coords.end(), c_.begin());
}

PointD PointD::scaled(double s) const {
  PointD p(dim_);
  for (int i = 0; i < dim_; ++i) p[i] = s * (*this)[i];
  return p;
}

bool PointD::operator==(const PointD& o) const {
  if (dim_ != o.dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if ((*this)[i] != o[i]) return false;
  return true;
}

double squared_distance(const PointD& a, const PointD& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

double distance(const PointD& a, const PointD& b) { return std::sqrt(squared_distance(a, b)); }

double norm(const PointD& a) {
  double s = 0.0;
  for (double v : a.coords()) s += v * v;
  return std::sqrt(s);
}

Ball::Ball(PointD c, double r) : center(c), radius(r) {}

bool intersects(const Ball& a, const Ball& b) { return distance(a.center, b.center) < a.radius + b.radius; }

bool contains(const Ball& outer, const Ball& inner) {
  return distance(outer.center, inner.center) + inner.radius <= outer.radius;
}

Ball dilate(const Ball& b, double factor) {
  if (!(factor >= 1.0)) throw std::invalid_argument("dilate: factor must be >= 1");
  return Ball(b.center, b.radius * factor);
}

double surface_gap(const Ball& a, const Ball& b) {
  return std::max(0.0, distance(a.center, b.center) - a.radius - b.radius);
}

double set_distance(std::span<const Ball> a, std::span<const Ball> b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Ball& x : a)
    for (const Ball& y : b) best = std::min(best, surface_gap(x, y));
  return best;
}

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

double ball_volume(double radius, int d) { return unit_ball_volume(d) * std::pow(radius, d); }

double Domain::volume() const {
  if (kind == DomainKind::cube) return std::pow(2.0 * extent, dim);
  return ball_volume(extent, dim);
}

bool Domain::contains(const PointD& x) const {
  if (kind == DomainKind::cube) {
    for (double v : x.coords())
      if (std::abs(v) >= extent) return false;
    return true;
  }
  return norm(x) < extent;
}

Domain Domain::scaled(double factor) const { return Domain{kind, extent * factor, dim}; }

Domain Domain::unit_cube(int d) { return Domain{DomainKind::cube, 0.5, d}; }

const char* to_string(DomainKind k) { return k == DomainKind::cube ? "cube" : "ball"; }

DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "cube") return DomainKind::cube;
  if (s == "ball") return DomainKind::ball;
  throw std::invalid_argument("unknown domain kind '" + s + "'");
}

// -- spatial index ----------------------------------------------------------

std::uint64_t fingerprint_balls(std::span<const Ball> balls) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ balls.size();
  auto mix = [&h](double v) {
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  };
  for (const Ball& b : balls) {
    for (double v : b.center.coords()) mix(v);
    mix(b.radius);
  }
  return h;
}

double adaptive_cell_size(std::span<const Ball> balls, double slack) {
  std::vector<double> r;
  r.reserve(balls.size());
  for (const Ball& b : balls)
    if (b.radius > 0.0) r.push_back(b.radius * slack);
  if (r.empty()) return 1.0;
  const std::size_t q = (r.size() * 9) / 10;
  std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(q), r.end());
  return 2.0 * r[q];
}

SpatialIndex::SpatialIndex(std::span<const Ball> balls, double slack) : SpatialIndex(balls, slack, Options{}) {}

SpatialIndex::SpatialIndex(std::span<const Ball> balls, double slack, Options opts)
    : slack_(slack), count_(balls.size()), max_cells_(opts.max_cells_per_ball) {
  if (!(slack >= 1.0)) throw std::invalid_argument("SpatialIndex: slack must be >= 1");
  fingerprint_ = fingerprint_balls(balls);
  dim_ = balls.empty() ? 3 : balls.front().center.dim();
  if (balls.size() <= 1) {
    single_ = true;
    for (std::size_t i = 0; i < balls.size(); ++i) overflow_.push_back(i);
    return;
  }
  cell_size_ = opts.cell_size;
  if (!(cell_size_ > 0.0)) {
    double rmax = 0.0;
    for (const Ball& b : balls) rmax = std::max(rmax, b.radius * slack);
    cell_size_ = rmax > 0.0 ? 2.0 * rmax : 1.0;
  }
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball box(balls[i].center, balls[i].radius * slack);
    std::size_t cells = 1;
    bool too_many = false;
    for (int k = 0; k < dim_; ++k) {
      const auto lo = static_cast<long long>(std::floor((box.center[k] - box.radius) / cell_size_));
      const auto hi = static_cast<long long>(std::floor((box.center[k] + box.radius) / cell_size_));
      cells *= static_cast<std::size_t>(hi - lo + 1);
      if (cells > max_cells_) {
        too_many = true;
        break;
      }
    }
    if (too_many) {
      overflow_.push_back(i);
      continue;
    }
    for_each_cell(box, [&](CellKey key) { cells_[key].push_back(i); });
  }
}

SpatialIndex::CellKey SpatialIndex::key_of(std::span<const long long> cell) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (long long c : cell) {
    h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ULL;
  }
  return h;
}

template <class Fn>
void SpatialIndex::for_each_cell(const Ball& box, Fn&& fn) const {
  std::array<long long, kMaxDimension> lo{}, hi{}, cur{};
  for (int k = 0; k < dim_; ++k) {
    lo[k] = static_cast<long long>(std::floor((box.center[k] - box.radius) / cell_size_));
    hi[k] = static_cast<long long>(std::floor((box.center[k] + box.radius) / cell_size_));
    cur[k] = lo[k];
  }
  const auto n = static_cast<std::size_t>(dim_);
  while (true) {
    fn(key_of(std::span<const long long>(cur.data(), n)));
    int k = 0;
    while (k < dim_) {
      if (++cur[k] <= hi[k]) break;
      cur[k] = lo[k];
      ++k;
    }
    if (k == dim_) break;
  }
}

void SpatialIndex::query_into(const Ball& q, std::vector<std::size_t>& out) const {
  out.clear();
  out.insert(out.end(), overflow_.begin(), overflow_.end());
  if (!single_) {
    std::size_t cells = 1;
    bool huge = false;
    for (int k = 0; k < dim_; ++k) {
      const auto lo = static_cast<long long>(std::floor((q.center[k] - q.radius) / cell_size_));
      const auto hi = static_cast<long long>(std::floor((q.center[k] + q.radius) / cell_size_));
      cells *= static_cast<std::size_t>(hi - lo + 1);
      if (cells > 4 * max_cells_ + cells_.size()) {
        huge = true;
        break;
      }
    }
    if (huge) {
      // Query box covers more cells than there are entries: scan the table.
      for (const auto& [key, ids] : cells_) out.insert(out.end(), ids.begin(), ids.end());
    } else {
      for_each_cell(q, [&](CellKey key) {
        if (auto it = cells_.find(key); it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
      });
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

std::vector<std::size_t> SpatialIndex::query(const Ball& q) const {
  std::vector<std::size_t> out;
  query_into(q, out);
  return out;
}

bool SpatialIndex::built_over(std::span<const Ball> balls, double slack) const {
  return balls.size() == count_ && slack == slack_ && fingerprint_balls(balls) == fingerprint_;
}

std::vector<std::pair<std::size_t, std::size_t>> near_pairs(std::span<const Ball> balls, double slack,
                                                            const SpatialIndex& index) {
  if (!index.built_over(balls, slack)) throw StaleIndexError("near_pairs: index is stale, rebuild required");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball qi = dilate(balls[i], slack);
    index.query_into(qi, cand);
    for (std::size_t j : cand) {
      if (j <= i) continue;
      if (intersects(qi, dilate(balls[j], slack))) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::vector<std::pair<std::size_t, std::size_t>> near_pairs_brute_force(std::span<const Ball> balls, double slack) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j)
      if (intersects(dilate(balls[i], slack), dilate(balls[j], slack))) pairs.emplace_back(i, j);
  return pairs;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

}  // namespace perfolab
