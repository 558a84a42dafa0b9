#include "sv/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sv/errors.hpp"

namespace sv {

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

bool is_missing(std::string_view s) {
  const std::string t = lower(trim(s));
  return t.empty() || t == "na" || t == "nan" || t == "null";
}

bool is_iso_date(std::string_view s) {
  const std::string t = trim(s);
  if (t.size() < 10 || t[4] != '-' || t[7] != '-') return false;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(t[static_cast<std::size_t>(i)]))) return false;
  }
  if (t.size() > 10 && t[10] != 'T' && t[10] != ' ') return false;
  const int y = std::stoi(t.substr(0, 4));
  const auto m = static_cast<unsigned>(std::stoi(t.substr(5, 2)));
  const auto d = static_cast<unsigned>(std::stoi(t.substr(8, 2)));
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      if (field_started && !field.empty()) {
        throw DataError("CSV line " + std::to_string(line) + ": quote inside an unquoted field");
      }
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("CSV ends inside a quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

DataTable ingest_csv_text(std::string_view text, const IngestOptions& options) {
  const auto records = parse_csv(text);
  if (records.empty()) throw DataError("CSV has no header row");
  const auto& header = records.front();
  const std::size_t width = header.size();
  if (records.size() < 2) throw DataError("CSV has no data rows");

  auto find_column = [&](const std::string& key) -> std::size_t {
    for (std::size_t j = 0; j < width; ++j) {
      if (trim(header[j]) == key) return j;
    }
    if (auto idx = parse_number(key); idx && *idx == std::floor(*idx) && *idx >= 1 && *idx <= static_cast<double>(width)) {
      return static_cast<std::size_t>(*idx) - 1;
    }
    throw DataError("column '" + key + "' not found in header");
  };

  std::optional<std::size_t> date_col;
  if (options.date_column) {
    date_col = find_column(*options.date_column);
  } else if (lower(trim(header.front())) == "date") {
    date_col = 0;
  }

  std::vector<std::size_t> cols;
  if (options.columns.empty()) {
    for (std::size_t j = 0; j < width; ++j) {
      if (!date_col || j != *date_col) cols.push_back(j);
    }
  } else {
    for (const auto& c : options.columns) cols.push_back(find_column(trim(c)));
  }
  if (cols.empty()) throw DataError("no numeric columns selected");

  DataTable table;
  for (std::size_t j : cols) table.names.push_back(trim(header[j]));
  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  table.values.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i) + 1];
    const std::string row = std::to_string(i + 2);
    if (rec.size() != width) {
      throw DataError("row " + row + ": expected " + std::to_string(width) + " fields, found " +
                      std::to_string(rec.size()));
    }
    if (date_col) {
      const std::string& d = rec[*date_col];
      if (!is_iso_date(d)) throw DataError("row " + row + ", column " + std::to_string(*date_col + 1) +
                                           ": '" + d + "' is not an ISO-8601 date");
      table.dates.push_back(trim(d));
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& cell = rec[cols[c]];
      const std::string where = "row " + row + ", column " + std::to_string(cols[c] + 1) + " (" + table.names[c] + ")";
      if (is_missing(cell)) throw DataError(where + ": missing value");
      const auto v = parse_number(cell);
      if (!v || !std::isfinite(*v)) throw DataError(where + ": cannot parse '" + cell + "' as a number");
      table.values(i, static_cast<Eigen::Index>(c)) = *v;
    }
  }
  return table;
}

DataTable ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return ingest_csv_text(ss.str(), options);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

Eigen::MatrixXd log_returns(const Eigen::Ref<const Eigen::MatrixXd>& prices, double scale) {
  if (prices.rows() < 2) throw DataError("log returns need at least two prices");
  for (Eigen::Index j = 0; j < prices.cols(); ++j) {
    for (Eigen::Index i = 0; i < prices.rows(); ++i) {
      if (!(prices(i, j) > 0.0)) {
        throw DataError("row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                        ": log returns need positive prices");
      }
    }
  }
  const Eigen::ArrayXXd logp = prices.array().log();
  const Eigen::Index n = prices.rows();
  return scale * (logp.bottomRows(n - 1) - logp.topRows(n - 1)).matrix();
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) os_ << ',';
    os_ << csv_escape(fields[i]);
  }
  os_ << "\r\n";
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = trim(body.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> KeyValueConfig::get_int(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  int out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) throw ConfigError(key + " expects an integer, got '" + *v + "'");
  return out;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  const auto d = parse_number(*v);
  if (!d) throw ConfigError(key + " expects a number, got '" + *v + "'");
  return d;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  const std::string t = lower(*v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + " expects true or false, got '" + *v + "'");
}

std::vector<std::pair<std::string, std::string>> KeyValueConfig::section(const std::string& prefix) const {
  std::vector<std::pair<std::string, std::string>> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(p, 0) == 0) out.emplace_back(k.substr(p.size()), v);
  }
  return out;
}

void KeyValueConfig::check_keys(const std::vector<std::string>& known, const std::vector<std::string>& prefixes) const {
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) != known.end()) continue;
    const bool in_section = std::any_of(prefixes.begin(), prefixes.end(),
                                        [&](const std::string& p) { return k.rfind(p + ".", 0) == 0; });
    if (!in_section) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(sep, start);
    const auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    const std::string t = trim(piece);
    if (!t.empty()) out.push_back(t);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& piece : split_list(text)) {
    const auto v = parse_number(piece);
    if (!v) throw ConfigError("cannot parse '" + piece + "' as a number");
    out.push_back(*v);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace sv
