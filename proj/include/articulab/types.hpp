#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "articulab/geom.hpp"

namespace articulab {

enum class Category {
  Bottle,
  Pen,
  CoffeeMaker,
  Window,
  Door,
  Lamp,
  Microwave,
  Safe,
  PressureCooker,
};

inline constexpr int kNumCategories = 9;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::Bottle,  Category::Pen,       Category::CoffeeMaker,
    Category::Window,  Category::Door,      Category::Lamp,
    Category::Microwave, Category::Safe,    Category::PressureCooker,
};

std::string to_string(Category c);
Category category_from_string(const std::string& s);

// Dataset-scale object counts per category.
int default_instance_count(Category c);

enum class JointKind { Revolute, Prismatic };

struct Interval {
  double lo = 0, hi = 0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// Axis and anchor are in the owning part's parent frame (the object base).
struct JointSpec {
  JointKind kind = JointKind::Revolute;
  Vec3 axis{0, 0, 1};
  Vec3 anchor{};
  Interval nominal{};
  double value = 0;
};

}  // namespace articulab
