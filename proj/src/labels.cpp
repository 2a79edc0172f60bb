#include "fundusda/labels.hpp"

#include <stdexcept>

namespace fundusda {

const std::array<std::string, kNumClasses>& class_names() {
  static const std::array<std::string, kNumClasses> names = {
      "hemorrhage", "drusen", "hard_exudation", "soft_exudation",
      "retinal_hole"};
  return names;
}

int class_index(std::string_view name) {
  const auto& names = class_names();
  for (int i = 0; i < kNumClasses; ++i)
    if (names[i] == name) return i;
  return -1;
}

bool label_is_binary(const LabelVector& y) {
  for (double v : y)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

bool label_in_range(const LabelVector& y) {
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

std::string label_to_string(const LabelVector& y) {
  std::string out;
  for (int i = 0; i < kNumClasses; ++i) {
    if (y[i] > 0.0) {
      if (!out.empty()) out += ';';
      out += class_names()[i];
    }
  }
  return out;
}

LabelVector label_from_string(std::string_view s) {
  LabelVector y = zero_label();
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t sep = s.find(';', pos);
    if (sep == std::string_view::npos) sep = s.size();
    std::string_view token = s.substr(pos, sep - pos);
    if (!token.empty()) {
      int idx = class_index(token);
      if (idx < 0)
        throw std::invalid_argument("unknown class name: " +
                                    std::string(token));
      y[idx] = 1.0;
    }
    pos = sep + 1;
  }
  return y;
}

}  // namespace fundusda
