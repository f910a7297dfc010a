#include "table.hpp"

#include <stdexcept>

#include "json.hpp"
#include "trf/format.hpp"

namespace trf::cli {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size()) throw std::logic_error("table row has the wrong width");
  rows_.push_back(std::move(row));
}

void Table::write_csv(std::ostream& out) const {
  for (std::size_t c = 0; c < header_.size(); ++c) out << (c ? "," : "") << header_[c];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out << format_double(v);
            else out << v;
          },
          row[c]);
    }
    out << '\n';
  }
}

void Table::write_json(std::ostream& out) const {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < row.size(); ++c) std::visit([&](const auto& v) { obj[header_[c]] = v; }, row[c]);
    arr.push_back(std::move(obj));
  }
  out << arr.dump(2) << '\n';
}

}  // namespace trf::cli
