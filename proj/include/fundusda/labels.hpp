#pragma once

#include <array>
#include <string>
#include <string_view>

namespace fundusda {

// The five lesion classes, in label-vector order. "Normal" is the all-zero
// vector, not a sixth class.
inline constexpr int kNumClasses = 5;

using LabelVector = std::array<double, kNumClasses>;

const std::array<std::string, kNumClasses>& class_names();

// Index for a class name, -1 if unknown.
int class_index(std::string_view name);

inline LabelVector zero_label() { return LabelVector{0, 0, 0, 0, 0}; }

bool label_is_binary(const LabelVector& y);
bool label_in_range(const LabelVector& y);  // every component in [0,1]

// ";"-joined class names of positive components; empty string for all-zero.
std::string label_to_string(const LabelVector& y);

// Parse ";"-joined class names. Throws std::invalid_argument on unknown name.
LabelVector label_from_string(std::string_view s);

}  // namespace fundusda
