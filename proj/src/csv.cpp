#include "panel/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace panel {

std::string format_number(double value, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::runtime_error("missing CSV column: " + name);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && line_no > 1) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (line_no == 1) {
      table.header = cells;
    } else {
      if (cells.size() != table.header.size()) {
        throw std::runtime_error("row " + std::to_string(line_no) + ": expected " +
                                 std::to_string(table.header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) {
    throw std::runtime_error("empty CSV file: " + path);
  }
  return table;
}

}  // namespace panel
