#pragma once

#include <algorithm>
#include <initializer_list>
#include <iterator>
#include <vector>

namespace svirgo {

// Sorted, duplicate-free vector. Iteration order is ascending, which is what
// the wire encoding and the traces rely on.
template <class T>
class FlatSet {
 public:
  using value_type = T;
  using const_iterator = typename std::vector<T>::const_iterator;

  FlatSet() = default;
  FlatSet(std::initializer_list<T> items) : items_(items) { normalize(); }
  explicit FlatSet(std::vector<T> items) : items_(std::move(items)) { normalize(); }

  template <class It>
  FlatSet(It first, It last) : items_(first, last) {
    normalize();
  }

  bool insert(const T& v) {
    auto it = std::lower_bound(items_.begin(), items_.end(), v);
    if (it != items_.end() && *it == v) return false;
    items_.insert(it, v);
    return true;
  }

  bool erase(const T& v) {
    auto it = std::lower_bound(items_.begin(), items_.end(), v);
    if (it == items_.end() || *it != v) return false;
    items_.erase(it);
    return true;
  }

  bool contains(const T& v) const {
    return std::binary_search(items_.begin(), items_.end(), v);
  }

  // this \ other
  FlatSet difference(const FlatSet& other) const {
    FlatSet out;
    std::set_difference(items_.begin(), items_.end(), other.items_.begin(),
                        other.items_.end(), std::back_inserter(out.items_));
    return out;
  }

  bool is_subset_of(const FlatSet& other) const {
    return std::includes(other.items_.begin(), other.items_.end(),
                         items_.begin(), items_.end());
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  const std::vector<T>& items() const { return items_; }
  void clear() { items_.clear(); }

  bool operator==(const FlatSet&) const = default;

 private:
  void normalize() {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  }

  std::vector<T> items_;
};

}  // namespace svirgo
