#include "dfdb/dataset.hpp"

#include <map>
#include <stdexcept>

namespace dfdb {

Dataset::Dataset(ProductDomain domain, std::vector<Point> points)
    : domain_(std::move(domain)), points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("dataset must be nonempty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!domain_.contains(points_[i])) {
      throw std::invalid_argument("observation " + std::to_string(i) + " " +
                                  to_string(points_[i]) + " is not in the domain");
    }
  }
}

CountedPoints count_unique(const Dataset& data) {
  std::map<Point, double> counts;
  for (const auto& x : data.points()) counts[x] += 1.0;
  CountedPoints out;
  out.points.reserve(counts.size());
  out.counts.reserve(counts.size());
  for (auto& [x, c] : counts) {
    out.points.push_back(x);
    out.counts.push_back(c);
  }
  out.total = static_cast<double>(data.size());
  return out;
}

CountedPoints as_counted(const Dataset& data) {
  CountedPoints out;
  out.points = data.points();
  out.counts.assign(data.size(), 1.0);
  out.total = static_cast<double>(data.size());
  return out;
}

CountedPoints weighted_points(const Dataset& data, Aggregation mode) {
  switch (mode) {
    case Aggregation::Never:
      return as_counted(data);
    case Aggregation::Always:
      return count_unique(data);
    case Aggregation::Auto: {
      auto counted = count_unique(data);
      if (2 * counted.points.size() < data.size()) return counted;
      return as_counted(data);
    }
  }
  return as_counted(data);
}

}  // namespace dfdb
