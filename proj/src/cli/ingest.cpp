#include "cli/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace densityshape::cli {

namespace {

std::string trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

bool to_real(const std::string& token, double& v)
{
  if (token.empty())
    return false;
  const char* first = token.data();
  if (*first == '+')
    ++first;
  const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
  return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(v);
}

bool all_digits(const std::string& s)
{
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

} // namespace

IngestReport ingest_text(const std::string& text, const std::string& column, const std::string& source)
{
  const bool by_index = all_digits(column);
  const bool by_name = !column.empty() && !by_index;
  std::size_t index = 0;
  if (by_index) {
    index = std::stoul(column);
    if (index == 0)
      throw Error("column index is 1-based");
    --index;
  }

  std::vector<double> values;
  bool header_seen = false;
  std::string resolved = column.empty() ? "1" : column;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      line.erase(0, 3);
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    if (trim(line).empty())
      continue;
    const std::vector<std::string> cells = split(line);

    if (!header_seen) {
      header_seen = true;
      double probe = 0.0;
      const bool numeric = std::all_of(cells.begin(), cells.end(), [&](const std::string& c) { return to_real(c, probe); });
      if (by_name || !numeric) {
        if (by_name) {
          const auto it = std::find(cells.begin(), cells.end(), column);
          if (it == cells.end())
            throw Error(source + ": no column named '" + column + "'");
          index = static_cast<std::size_t>(it - cells.begin());
        } else if (index < cells.size()) {
          resolved = cells[index];
        }
        if (!numeric || by_name)
          continue;
      }
    }

    if (index >= cells.size())
      throw Error(source + ": line " + std::to_string(line_no) + " has no column " + std::to_string(index + 1));
    double v = 0.0;
    if (!to_real(cells[index], v))
      throw Error(source + ": line " + std::to_string(line_no) + ": cannot parse '" + cells[index] +
                  "' as a finite real");
    values.push_back(v);
  }
  if (values.empty())
    throw Error(source + ": no observations");

  IngestReport report{ Sample(values), 0, 0.0, 0.0, 0, {} };
  const auto v = report.sample.values();
  report.n = v.size();
  report.min = v.front();
  report.max = v.back();
  for (std::size_t i = 1; i < v.size(); ++i)
    report.duplicates += v[i] == v[i - 1];
  report.column = resolved;
  return report;
}

IngestReport ingest(const std::string& path, const std::string& column)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open input '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ingest_text(buffer.str(), column, path);
}

} // namespace densityshape::cli
