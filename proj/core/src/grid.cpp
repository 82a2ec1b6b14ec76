#include "specseg/grid.hpp"

#include <algorithm>

namespace specseg {

namespace {

void check_class_count(int num_classes) {
  if (num_classes < 1 || num_classes > 256) {
    throw ArgumentError("label mask class count must be in [1, 256], got " +
                        std::to_string(num_classes));
  }
}

}  // namespace

LabelMask::LabelMask(std::size_t height, std::size_t width, int num_classes, std::uint8_t fill)
    : height_(height), width_(width), num_classes_(num_classes) {
  check_class_count(num_classes);
  if (height == 0 || width == 0) throw ArgumentError("label mask dimensions must be positive");
  if (fill >= num_classes) throw ArgumentError("label mask fill value out of range");
  labels_.assign(height * width, fill);
}

LabelMask::LabelMask(std::size_t height, std::size_t width, int num_classes,
                     std::vector<std::uint8_t> labels)
    : height_(height), width_(width), num_classes_(num_classes), labels_(std::move(labels)) {
  check_class_count(num_classes);
  if (height == 0 || width == 0) throw ArgumentError("label mask dimensions must be positive");
  if (labels_.size() != height * width) {
    throw ArgumentError("label mask data length does not match its dimensions");
  }
  const auto bad = std::find_if(labels_.begin(), labels_.end(),
                                [&](std::uint8_t v) { return v >= num_classes_; });
  if (bad != labels_.end()) {
    throw ArgumentError("label " + std::to_string(*bad) + " not below class count " +
                        std::to_string(num_classes_));
  }
}

void LabelMask::set(std::size_t row, std::size_t col, int label) {
  if (label < 0 || label >= num_classes_) throw ArgumentError("label out of range");
  if (row >= height_ || col >= width_) throw ArgumentError("label position out of range");
  labels_[row * width_ + col] = static_cast<std::uint8_t>(label);
}

std::size_t LabelMask::count(int label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

}  // namespace specseg
