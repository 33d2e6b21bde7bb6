#include "mixclean/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mixclean/error.hpp"

namespace fs = std::filesystem;

namespace mixclean {
namespace {

struct Row {
  std::size_t line = 0;
  std::vector<std::string_view> cells;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits `text` into non-blank lines of comma-separated cells. The views
// point into `text`.
std::vector<Row> split_rows(std::string_view text) {
  std::vector<Row> rows;
  std::size_t line = 0;
  while (!text.empty()) {
    ++line;
    const std::size_t eol = text.find('\n');
    std::string_view raw = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    raw = trim(raw);
    if (raw.empty())
      continue;
    Row row;
    row.line = line;
    for (;;) {
      const std::size_t comma = raw.find(',');
      row.cells.push_back(trim(raw.substr(0, comma)));
      if (comma == std::string_view::npos)
        break;
      raw.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

[[noreturn]] void parse_error(const fs::path &path, std::size_t line,
                              const std::string &what) {
  fail(ErrorCode::Validation,
       path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view cell, const fs::path &path,
                    std::size_t line) {
  if (!cell.empty() && cell.front() == '+')
    cell.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    parse_error(path, line, "not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(v))
    parse_error(path, line, "non-finite value");
  return v;
}

int parse_int(std::string_view cell, const fs::path &path, std::size_t line) {
  int v = 0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    parse_error(path, line, "not an integer: '" + std::string(cell) + "'");
  return v;
}

void require_width(const Row &row, std::size_t width, const fs::path &path) {
  if (row.cells.size() != width)
    parse_error(path, row.line,
                "expected " + std::to_string(width) + " columns, found " +
                    std::to_string(row.cells.size()));
}

void append_row(std::string &out, std::span<const double> values) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j > 0)
      out += ',';
    out += format_double(values[j]);
  }
  out += '\n';
}

} // namespace

std::string format_double(double value) {
  if (!std::isfinite(value))
    fail(ErrorCode::Numerical, "refusing to write a non-finite value");
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc())
    fail(ErrorCode::Internal, "format_double: buffer too small");
  return std::string(buf, end);
}

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    fail(ErrorCode::Io, "error reading " + path.string());
  return ss.str();
}

void write_text_atomic(const fs::path &path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      fail(ErrorCode::Io, "cannot create directory " +
                              path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
      fail(ErrorCode::Io, "error writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::Io, "cannot move output into place at " + path.string());
  }
}

FeatureMatrix read_features(const fs::path &path) {
  const std::string text = read_text(path);
  const std::vector<Row> rows = split_rows(text);
  if (rows.empty())
    fail(ErrorCode::Validation, path.string() + ": no feature rows");
  const std::size_t dim = rows.front().cells.size();
  std::vector<double> data;
  data.reserve(rows.size() * dim);
  for (const Row &row : rows) {
    require_width(row, dim, path);
    for (std::string_view cell : row.cells)
      data.push_back(parse_double(cell, path, row.line));
  }
  return FeatureMatrix(rows.size(), dim, std::move(data));
}

std::string format_features(const FeatureMatrix &features) {
  std::string out;
  for (std::size_t i = 0; i < features.rows(); ++i)
    append_row(out, features.row(i));
  return out;
}

void write_features(const fs::path &path, const FeatureMatrix &features) {
  write_text_atomic(path, format_features(features));
}

std::vector<int> read_labels(const fs::path &path) {
  const std::string text = read_text(path);
  std::vector<int> labels;
  for (const Row &row : split_rows(text)) {
    require_width(row, 1, path);
    const int v = parse_int(row.cells.front(), path, row.line);
    if (v < 0)
      parse_error(path, row.line, "labels must be non-negative");
    labels.push_back(v);
  }
  return labels;
}

std::string format_labels(std::span<const int> labels) {
  std::string out;
  for (int v : labels) {
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

void write_labels(const fs::path &path, std::span<const int> labels) {
  write_text_atomic(path, format_labels(labels));
}

std::vector<ProbabilityVector> read_posteriors(const fs::path &path) {
  const std::string text = read_text(path);
  const std::vector<Row> rows = split_rows(text);
  std::vector<ProbabilityVector> out;
  out.reserve(rows.size());
  const std::size_t width = rows.empty() ? 0 : rows.front().cells.size();
  for (const Row &row : rows) {
    require_width(row, width, path);
    std::vector<double> v;
    v.reserve(width);
    for (std::string_view cell : row.cells)
      v.push_back(parse_double(cell, path, row.line));
    try {
      out.emplace_back(std::move(v));
    } catch (const Error &e) {
      parse_error(path, row.line, e.what());
    }
  }
  return out;
}

std::string format_posteriors(std::span<const ProbabilityVector> posteriors) {
  std::string out;
  for (const auto &p : posteriors)
    append_row(out, p.values());
  return out;
}

void write_posteriors(const fs::path &path,
                      std::span<const ProbabilityVector> posteriors) {
  write_text_atomic(path, format_posteriors(posteriors));
}

std::vector<CountVector> read_label_sets(const fs::path &path) {
  const std::string text = read_text(path);
  const std::vector<Row> rows = split_rows(text);
  if (rows.empty())
    fail(ErrorCode::Validation,
         path.string() + ": no label sets (L = 0)");
  const std::size_t width = rows.front().cells.size();
  std::vector<CountVector> out;
  out.reserve(rows.size());
  for (const Row &row : rows) {
    require_width(row, width, path);
    std::vector<int> counts;
    counts.reserve(width);
    for (std::string_view cell : row.cells) {
      const int v = parse_int(cell, path, row.line);
      if (v < 0)
        parse_error(path, row.line, "counts must be non-negative");
      counts.push_back(v);
    }
    try {
      out.emplace_back(std::move(counts));
    } catch (const Error &e) {
      parse_error(path, row.line, e.what());
    }
    if (out.back().trials() != out.front().trials())
      parse_error(path, row.line,
                  "row sums to " + std::to_string(out.back().trials()) +
                      " but earlier rows sum to " +
                      std::to_string(out.front().trials()));
  }
  return out;
}

std::string format_label_sets(std::span<const CountVector> sets) {
  std::string out;
  for (const auto &x : sets) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (c > 0)
        out += ',';
      out += std::to_string(x[c]);
    }
    out += '\n';
  }
  return out;
}

void write_label_sets(const fs::path &path, std::span<const CountVector> sets) {
  write_text_atomic(path, format_label_sets(sets));
}

} // namespace mixclean
