#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "polaron_tfim/errors.hpp"

namespace polaron_tfim {

enum class Sublattice : std::uint8_t { A = 0, B = 1, C = 2 };

inline char to_char(Sublattice s) { return static_cast<char>('A' + static_cast<int>(s)); }

inline Sublattice sublattice_from_string(const std::string& s) {
  if (s == "A") return Sublattice::A;
  if (s == "B") return Sublattice::B;
  if (s == "C") return Sublattice::C;
  throw Error("unknown sublattice label '" + s + "' (expected A, B or C)");
}

/// Triangular lattice on a W x H rhombic torus.
///
/// Sites carry skew coordinates (x, y) with primitive vectors a1 = (1, 0) and
/// a2 = (1/2, sqrt(3)/2); the site index is y * W + x (row-major). Neighbors are
/// listed in the fixed order
///
///   0: E  (x+1, y)      1: W  (x-1, y)
///   2: NE (x,   y+1)    3: SW (x,   y-1)
///   4: NW (x-1, y+1)    5: SE (x+1, y-1)
///
/// with periodic wrap in both directions. The sublattice label is (x - y) mod 3,
/// so a shift by a1 maps A -> B -> C -> A and no bond joins equal labels.
class LatticeGeom {
 public:
  static constexpr int kCoordination = 6;
  using Neighbors = std::array<int, kCoordination>;

  LatticeGeom() = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int size() const noexcept { return width_ * height_; }
  int bond_count() const noexcept { return static_cast<int>(tables_->bonds.size()); }

  int index(int x, int y) const noexcept {
    x %= width_;
    y %= height_;
    if (x < 0) x += width_;
    if (y < 0) y += height_;
    return y * width_ + x;
  }
  int column(int i) const noexcept { return i % width_; }
  int row(int i) const noexcept { return i / width_; }

  const Neighbors& neighbors(int i) const {
    check_index(i);
    return tables_->neighbors[static_cast<std::size_t>(i)];
  }

  Sublattice sublattice_of(int i) const {
    check_index(i);
    return tables_->sublattice[static_cast<std::size_t>(i)];
  }

  /// Each unordered bond once, as (i, j) with i < j, ordered by i then neighbor slot.
  const std::vector<std::pair<int, int>>& bonds() const noexcept { return tables_->bonds; }

  /// Flat neighbor table (6 entries per site) for inner loops.
  const std::vector<int>& flat_neighbors() const noexcept { return tables_->flat; }

  bool same_shape(const LatticeGeom& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  void check_index(int i) const {
    if (i < 0 || i >= size()) {
      throw IndexError("site index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(size()) + ")");
    }
  }

 private:
  struct Tables {
    std::vector<Neighbors> neighbors;
    std::vector<Sublattice> sublattice;
    std::vector<std::pair<int, int>> bonds;
    std::vector<int> flat;
  };

  friend LatticeGeom build_lattice(int width, int height);

  int width_ = 0;
  int height_ = 0;
  std::shared_ptr<const Tables> tables_;
};

inline LatticeGeom build_lattice(int width, int height) {
  if (width < 3 || height < 3) {
    throw SizeError("lattice dimensions must be at least 3, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  if (width % 3 != 0 || height % 3 != 0) {
    throw CommensurabilityError("lattice dimensions must be multiples of 3, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }

  LatticeGeom geom;
  geom.width_ = width;
  geom.height_ = height;

  auto tables = std::make_shared<LatticeGeom::Tables>();
  const int n = width * height;
  tables->neighbors.resize(static_cast<std::size_t>(n));
  tables->sublattice.resize(static_cast<std::size_t>(n));
  tables->flat.reserve(static_cast<std::size_t>(n) * LatticeGeom::kCoordination);

  static constexpr std::array<std::pair<int, int>, LatticeGeom::kCoordination> kOffsets{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {-1, 1}, {1, -1}}};

  for (int i = 0; i < n; ++i) {
    const int x = i % width;
    const int y = i / width;
    auto& nbrs = tables->neighbors[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < kOffsets.size(); ++k) {
      nbrs[k] = geom.index(x + kOffsets[k].first, y + kOffsets[k].second);
      tables->flat.push_back(nbrs[k]);
      if (i < nbrs[k]) tables->bonds.emplace_back(i, nbrs[k]);
    }
    tables->sublattice[static_cast<std::size_t>(i)] =
        static_cast<Sublattice>(((x - y) % 3 + 3) % 3);
  }

  geom.tables_ = std::move(tables);
  return geom;
}

}  // namespace polaron_tfim
