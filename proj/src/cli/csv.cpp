#include "sketchprune/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <tuple>

namespace sketchprune::cli {

namespace {

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("float formatting failed");
  return std::string(buf, ptr);
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  auto append_line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text += ',';
      text += quote_field(fields[i]);
    }
    text += '\n';
  };
  append_line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error("CSV row width differs from the header");
    append_line(r);
  }
  return text;
}

std::string render_rows(std::vector<ResultRow> rows,
                        const std::vector<std::string>& extra_columns) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.seed, a.method, a.s) < std::tie(b.seed, b.method, b.s);
  });
  std::vector<std::string> header = kResultColumns;
  header.insert(header.end(), extra_columns.begin(), extra_columns.end());
  std::vector<std::vector<std::string>> table;
  table.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> f = {r.run_id,
                                  std::to_string(r.seed),
                                  std::to_string(r.d),
                                  std::to_string(r.n),
                                  std::to_string(r.s),
                                  r.method,
                                  format_double(r.empirical_error),
                                  format_double(r.bound),
                                  r.kind,
                                  format_double(r.standard_error),
                                  format_double(r.distance),
                                  format_double(r.wall_time_ms)};
    f.insert(f.end(), r.extra.begin(), r.extra.end());
    table.push_back(std::move(f));
  }
  return render_csv(header, table);
}

void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream f(temp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + temp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw Error("write to " + temp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp);
    throw Error("cannot move output into " + path + ": " + ec.message());
  }
}

}  // namespace sketchprune::cli
