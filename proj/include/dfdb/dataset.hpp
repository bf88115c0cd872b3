#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfdb/domain.hpp"

namespace dfdb {

/// i.i.d. observations on a product domain, stored as positions.
class Dataset {
 public:
  Dataset(ProductDomain domain, std::vector<Point> points);

  const ProductDomain& domain() const { return domain_; }
  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return domain_.dim(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }

 private:
  ProductDomain domain_;
  std::vector<Point> points_;
};

/// Unique points in lexicographic order together with their multiplicities.
struct CountedPoints {
  std::vector<Point> points;
  std::vector<double> counts;
  double total = 0.0;
};

CountedPoints count_unique(const Dataset& data);
/// Every observation with multiplicity 1, in original order.
CountedPoints as_counted(const Dataset& data);

/// Sufficient-statistic view used by the losses: aggregated when fewer than
/// n/2 unique points exist, otherwise one entry per observation.
enum class Aggregation { Auto, Always, Never };
CountedPoints weighted_points(const Dataset& data, Aggregation mode);

}  // namespace dfdb
