#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace perfolab {

inline constexpr int kMaxDimension = 8;

/// A point of R^d, 3 <= d <= kMaxDimension, stored inline.
class PointD {
 public:
  PointD() = default;
  explicit PointD(int dim);
  PointD(std::initializer_list<double> coords);
  PointD(std::span<const double> coords);

  int dim() const { return dim_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coords() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  PointD scaled(double s) const;
  bool operator==(const PointD& o) const;

 private:
  std::array<double, kMaxDimension> c_{};
  int dim_ = 0;
};

double distance(const PointD& a, const PointD& b);
double squared_distance(const PointD& a, const PointD& b);
double norm(const PointD& a);

struct Ball {
  PointD center;
  double radius = 0.0;

  Ball() = default;
  Ball(PointD c, double r);
  bool operator==(const Ball& o) const = default;
};

/// Open balls: tangent balls are disjoint.
bool intersects(const Ball& a, const Ball& b);

/// Closed containment: a ball contains itself.
bool contains(const Ball& outer, const Ball& inner);

/// Throws std::invalid_argument for factor < 1.
Ball dilate(const Ball& b, double factor);

/// Surface gap max(0, |ca-cb| - ra - rb).
double surface_gap(const Ball& a, const Ball& b);

/// Infimum of pairwise surface gaps; +inf when either list is empty.
double set_distance(std::span<const Ball> a, std::span<const Ball> b);

double unit_ball_volume(int d);
double unit_sphere_area(int d);
double ball_volume(double radius, int d);

enum class DomainKind { cube, ball };

/// Origin-centred cube (extent = half-side) or ball (extent = radius).
struct Domain {
  DomainKind kind = DomainKind::cube;
  double extent = 0.5;
  int dim = 3;

  double volume() const;
  bool contains(const PointD& x) const;
  /// Domain dilated by 1/eps, i.e. (1/eps) D.
  Domain scaled(double factor) const;
  /// Half-width of an origin-centred bounding box.
  double bounding_half_width() const { return extent; }

  static Domain unit_cube(int d = 3);
  bool operator==(const Domain&) const = default;
};

const char* to_string(DomainKind k);
DomainKind domain_kind_from_string(const std::string& s);

class StaleIndexError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Uniform hashed grid over a list of balls, each registered (with its
/// slack-dilated bounding box) in every cell that box touches. Balls whose box
/// would cover too many cells go to an overflow list returned by every query.
class SpatialIndex {
 public:
  struct Options {
    double cell_size = 0.0;  // <= 0 selects twice the largest dilated radius
    std::size_t max_cells_per_ball = 512;
  };

  SpatialIndex() = default;
  SpatialIndex(std::span<const Ball> balls, double slack);
  SpatialIndex(std::span<const Ball> balls, double slack, Options opts);

  /// Indices of stored balls whose slack-dilated version may intersect `q`
  /// (a superset). Sorted and unique.
  std::vector<std::size_t> query(const Ball& q) const;
  void query_into(const Ball& q, std::vector<std::size_t>& out) const;

  double cell_size() const { return cell_size_; }
  double slack() const { return slack_; }
  std::size_t size() const { return count_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  bool built_over(std::span<const Ball> balls, double slack) const;

 private:
  using CellKey = std::uint64_t;
  CellKey key_of(std::span<const long long> cell) const;
  template <class Fn>
  void for_each_cell(const Ball& box_ball, Fn&& fn) const;

  std::unordered_map<CellKey, std::vector<std::size_t>> cells_;
  std::vector<std::size_t> overflow_;
  double cell_size_ = 1.0;
  double slack_ = 1.0;
  std::size_t count_ = 0;
  std::size_t max_cells_ = 512;
  int dim_ = 3;
  bool single_ = false;
  std::uint64_t fingerprint_ = 0;
};

std::uint64_t fingerprint_balls(std::span<const Ball> balls);

/// Cell size for lists with heavy-tailed radii: twice the 90th percentile of the
/// dilated radii, so typical balls touch few cells and giants overflow.
double adaptive_cell_size(std::span<const Ball> balls, double slack);

/// Pairs (i < j) whose slack-dilated balls intersect. Throws StaleIndexError
/// when `index` was not built over `balls` with the same slack.
std::vector<std::pair<std::size_t, std::size_t>> near_pairs(std::span<const Ball> balls, double slack,
                                                            const SpatialIndex& index);

/// O(n^2) reference for near_pairs.
std::vector<std::pair<std::size_t, std::size_t>> near_pairs_brute_force(std::span<const Ball> balls, double slack);

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace perfolab
