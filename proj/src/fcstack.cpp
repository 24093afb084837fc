#include "uda/fcstack.hpp"

#include <cctype>
#include <charconv>

namespace uda {

void FcStack::check_shape() const {
  for (int k = 0; k < kComponentCount; ++k) {
    if (planes[k].empty()) {
      throw Error("component " + std::to_string(k) + " is empty");
    }
    if (!planes[k].same_shape(planes[0])) {
      throw Error("component " + std::to_string(k) +
                  " differs in shape from component 0");
    }
  }
}

bool FcStack::same_shape(const FcStack& other) const {
  return planes[0].same_shape(other.planes[0]);
}

FcStack FcStack::zeros(int height, int width) {
  FcStack s;
  for (auto& p : s.planes) p = Image2D(height, width);
  return s;
}

FcStack operator+(const FcStack& a, const FcStack& b) {
  FcStack out;
  for (int k = 0; k < kComponentCount; ++k) out[k] = a[k] + b[k];
  return out;
}

FcStack operator*(double s, const FcStack& a) {
  FcStack out;
  for (int k = 0; k < kComponentCount; ++k) out[k] = s * a[k];
  return out;
}

ComponentSet::ComponentSet(std::initializer_list<int> indices) {
  for (int i : indices) insert(i);
}

ComponentSet ComponentSet::all() { return range(0, kComponentCount - 1); }

ComponentSet ComponentSet::range(int first, int last) {
  ComponentSet s;
  for (int i = first; i <= last; ++i) s.insert(i);
  return s;
}

void ComponentSet::check_index(int index) {
  if (index < 0 || index >= kComponentCount) {
    throw Error("component index " + std::to_string(index) +
                " outside [0, 14]");
  }
}

void ComponentSet::insert(int index) {
  check_index(index);
  bits_.set(static_cast<std::size_t>(index));
}

bool ComponentSet::contains(int index) const {
  check_index(index);
  return bits_.test(static_cast<std::size_t>(index));
}

ComponentSet ComponentSet::complement() const {
  ComponentSet s;
  s.bits_ = ~bits_;
  return s;
}

ComponentSet ComponentSet::operator|(const ComponentSet& other) const {
  ComponentSet s;
  s.bits_ = bits_ | other.bits_;
  return s;
}

namespace {

int parse_int(std::string_view tok, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw Error("malformed component list '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

ComponentSet ComponentSet::parse(std::string_view text) {
  std::string compact;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) compact.push_back(ch);
  }
  if (compact.empty() || compact == "none") return {};
  if (compact == "all") return all();

  ComponentSet s;
  std::string_view rest = compact;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{}
                                           : rest.substr(comma + 1);
    auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      s.insert(parse_int(item, text));
    } else {
      int a = parse_int(item.substr(0, dash), text);
      int b = parse_int(item.substr(dash + 1), text);
      if (a > b) {
        throw Error("descending range in component list '" +
                    std::string(text) + "'");
      }
      for (int i = a; i <= b; ++i) s.insert(i);
    }
  }
  return s;
}

std::string ComponentSet::to_string() const {
  std::string out;
  int k = 0;
  while (k < kComponentCount) {
    if (!bits_.test(static_cast<std::size_t>(k))) {
      ++k;
      continue;
    }
    int end = k;
    while (end + 1 < kComponentCount &&
           bits_.test(static_cast<std::size_t>(end + 1))) {
      ++end;
    }
    if (!out.empty()) out += ',';
    out += std::to_string(k);
    if (end > k) out += '-' + std::to_string(end);
    k = end + 1;
  }
  return out;
}

}  // namespace uda
