#include "dfdb/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace dfdb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Position parse_count(const std::string& field, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  if (field.empty()) throw ParseError(where + "empty field");
  if (field[0] == '-') throw ParseError(where + "negative count '" + field + "'");
  Position v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError(where + "not a nonnegative integer '" + field + "'");
  }
  return v;
}

}  // namespace

Dataset ingest_counts(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t d = 0;
  bool header = false;
  std::vector<Point> points;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (d == 0) {
      const auto fields = split(t);
      if (!fields.empty() && fields[0] == "x_0") {
        for (std::size_t j = 0; j < fields.size(); ++j) {
          if (fields[j] != "x_" + std::to_string(j)) {
            throw ParseError("line " + std::to_string(line_no) + ": expected column x_" +
                             std::to_string(j) + ", found '" + fields[j] + "'");
          }
        }
        d = fields.size();
        header = true;
        continue;
      }
      d = 1;
    }
    const auto fields = split(t);
    if (fields.size() != d) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(d) + (header ? " columns" : " column") + ", found " +
                       std::to_string(fields.size()));
    }
    Point p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = parse_count(fields[j], line_no);
    points.push_back(std::move(p));
  }
  if (points.empty()) throw ParseError("no observations");
  return Dataset(ProductDomain::uniform(d, CoordinateDomain::half_infinite_min()),
                 std::move(points));
}

Dataset ingest_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return ingest_counts(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? "," : "") << "x_" << j;
  out << '\n';
  for (const auto& p : data.points()) {
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << p[j];
    out << '\n';
  }
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

Json to_json(const CalibrationResult& r) {
  Json j;
  j["beta_star"] = r.beta_star;
  j["B"] = r.B;
  j["minimisers"] = to_json(r.minimisers);
  j["grad_norms"] = r.grad_norms;
  j["converged"] = r.converged;
  j["numerator"] = r.numerator;
  j["denominator"] = r.denominator;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace dfdb
