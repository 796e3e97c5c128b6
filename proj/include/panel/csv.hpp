#pragma once

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace panel {

// Formats a double with the given number of significant digits ("%.Ng");
// the project-wide default is 9, with 17 as the full-precision option.
std::string format_number(double value, int significant_digits = 9);

// Minimal comma-separated writer: LF line endings, '.' decimal separator,
// no quoting (the schemas contain no text fields with commas).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void write_row(const std::vector<std::string>& cells);
  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by header name; throws when absent.
  std::size_t column(const std::string& name) const;
};

// Reads a whole CSV file; throws std::runtime_error with the offending line
// number on ragged rows.
CsvTable read_csv(const std::string& path);

}  // namespace panel
