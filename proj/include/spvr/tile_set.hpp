// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace spvr {

/// Fixed-size membership vector over the M tiles of a segment.
///
/// Used for ground-truth requests, predictions, privacy-aware requests and
/// streamed selections alike. Binary operations require equal sizes.
class TileSet {
 public:
  TileSet() = default;
  explicit TileSet(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}
  TileSet(std::size_t size, std::initializer_list<std::size_t> members) : TileSet(size) {
    for (auto m : members) insert(m);
  }

  static TileSet all(std::size_t size) {
    TileSet s(size);
    for (std::size_t i = 0; i < size; ++i) s.insert(i);
    return s;
  }

  std::size_t size() const noexcept { return size_; }

  void insert(std::size_t i) {
    check(i);
    words_[i / 64] |= (std::uint64_t{1} << (i % 64));
  }
  void erase(std::size_t i) {
    check(i);
    words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }
  bool contains(std::size_t i) const {
    check(i);
    return (words_[i / 64] >> (i % 64)) & 1U;
  }

  /// L1 norm of the indicator vector.
  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool empty() const noexcept { return count() == 0; }

  /// Inner product of the two indicator vectors.
  std::size_t intersection_count(const TileSet& other) const {
    same_size(other);
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      c += static_cast<std::size_t>(std::popcount(words_[k] & other.words_[k]));
    return c;
  }

  bool is_subset_of(const TileSet& other) const {
    same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~other.words_[k]) return false;
    return true;
  }

  TileSet& operator|=(const TileSet& other) {
    same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= other.words_[k];
    return *this;
  }
  TileSet& operator&=(const TileSet& other) {
    same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= other.words_[k];
    return *this;
  }
  friend TileSet operator|(TileSet a, const TileSet& b) { return a |= b; }
  friend TileSet operator&(TileSet a, const TileSet& b) { return a &= b; }

  TileSet complement() const {
    TileSet c(size_);
    for (std::size_t i = 0; i < size_; ++i)
      if (!contains(i)) c.insert(i);
    return c;
  }

  /// Members in ascending order.
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for (std::size_t k = 0; k < words_.size(); ++k) {
      auto w = words_[k];
      while (w) {
        out.push_back(k * 64 + static_cast<std::size_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
    return out;
  }

  friend bool operator==(const TileSet&, const TileSet&) = default;

 private:
  void check(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("tile index out of range");
  }
  void same_size(const TileSet& other) const {
    if (other.size_ != size_) throw std::invalid_argument("tile set size mismatch");
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace spvr
