#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace trf::cli {

/// A small column table that renders as CSV or as a JSON array of objects.
class Table {
 public:
  using Cell = std::variant<std::string, double, long long>;

  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row);
  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace trf::cli
