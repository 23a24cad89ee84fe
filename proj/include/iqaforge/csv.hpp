#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iqaforge {

struct CsvRow {
  std::size_t line = 0;  // 1-based source line
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  // Index of a header column, or throws MalformedFile.
  std::size_t column(std::string_view name) const;
};

// RFC 4180 subset: comma separated, double-quote escaping, LF or CRLF.
std::vector<std::string> split_csv_line(std::string_view line);
CsvTable parse_csv(std::string_view text, std::string_view origin = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string join_csv(const std::vector<std::string>& fields);

std::string trim(std::string_view text);
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);
// Shortest representation that round-trips.
std::string format_double(double value);
std::string format_fixed(double value, int precision);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames into place.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace iqaforge
