#pragma once

#include <array>
#include <bitset>
#include <string>
#include <string_view>

#include "uda/image.hpp"

namespace uda {

inline constexpr int kLevels = 3;
// 1 lowpass + 2 + 4 + 8 directional components.
inline constexpr int kComponentCount = 15;

// First component index of the directional block for layer 1..3.
constexpr int layer_offset(int layer) { return (1 << layer) - 1; }
constexpr int layer_directions(int layer) { return 1 << layer; }

// 0 for the lowpass plane, otherwise the pyramid layer (1..3) the
// component belongs to.
constexpr int layer_of(int component) {
  if (component == 0) return 0;
  if (component <= 2) return 1;
  if (component <= 6) return 2;
  return 3;
}

// The 15 frequency components of one image. Plane 0 is the coarsest
// lowpass, 1..2 the directions of the finest bandpass, 3..6 the middle
// layer, 7..14 the coarsest bandpass.
struct FcStack {
  std::array<Image2D, kComponentCount> planes;

  int height() const { return planes[0].height(); }
  int width() const { return planes[0].width(); }
  // Throws Error unless all planes are non-empty and share one shape.
  void check_shape() const;
  bool same_shape(const FcStack& other) const;

  Image2D& operator[](int k) { return planes[static_cast<std::size_t>(k)]; }
  const Image2D& operator[](int k) const {
    return planes[static_cast<std::size_t>(k)];
  }

  static FcStack zeros(int height, int width);
};

FcStack operator+(const FcStack& a, const FcStack& b);
FcStack operator*(double s, const FcStack& a);

// A subset of component indices, used both for kept-component sets and
// for the domain-invariant set of the frequency transfer.
class ComponentSet {
 public:
  ComponentSet() = default;
  ComponentSet(std::initializer_list<int> indices);

  static ComponentSet all();
  static ComponentSet none() { return {}; }
  // Inclusive range [first, last].
  static ComponentSet range(int first, int last);
  // Parses "0,7-14" style lists. Whitespace is ignored; "" and "none" give
  // the empty set, "all" the full set.
  static ComponentSet parse(std::string_view text);

  void insert(int index);
  bool contains(int index) const;
  int count() const { return static_cast<int>(bits_.count()); }
  bool empty() const { return bits_.none(); }
  ComponentSet complement() const;
  ComponentSet operator|(const ComponentSet& other) const;
  bool operator==(const ComponentSet&) const = default;

  // Canonical "a-b,c" form; "" for the empty set.
  std::string to_string() const;

 private:
  static void check_index(int index);
  std::bitset<kComponentCount> bits_;
};

}  // namespace uda
