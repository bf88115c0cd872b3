#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dfdb/calibration.hpp"
#include "dfdb/dataset.hpp"
#include "dfdb/samplers.hpp"

namespace dfdb {

using Json = nlohmann::ordered_json;

/// Malformed input file or configuration.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Count data as positions on {0, 1, ...}^d. Accepts a headerless single
 * column (d = 1) or a header x_0,...,x_{d-1} followed by d columns.
 * Negative or non-integer entries raise ParseError naming the line.
 */
Dataset ingest_counts(std::istream& in);
Dataset ingest_counts(const std::filesystem::path& path);

/// Header x_0,...,x_{d-1}, one row per observation.
void write_dataset_csv(std::ostream& out, const Dataset& data);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Json to_json(const CalibrationResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace dfdb
