#ifndef SV_IO_HPP
#define SV_IO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sv {

/// Numeric columns read from a CSV file (n x m) with an optional date index.
struct DataTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
  std::vector<std::string> dates;
};

struct IngestOptions {
  /// Column names or 1-based indices; empty selects every non-date column.
  std::vector<std::string> columns;
  /// Date column name. Without one, a leading column named "date" is used.
  std::optional<std::string> date_column;
};

/// Splits RFC-4180 text into records (quoted fields, doubled quotes, CRLF or LF).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

DataTable ingest_csv_text(std::string_view text, const IngestOptions& options = {});
DataTable ingest_csv(const std::filesystem::path& path, const IngestOptions& options = {});

/// scale * (log p_t - log p_{t-1}) column-wise; one row shorter.
Eigen::MatrixXd log_returns(const Eigen::Ref<const Eigen::MatrixXd>& prices, double scale = 100.0);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

/// Flat typed key-value document. Lines are `key = value`; `[section]` prefixes
/// the following keys with `section.`; `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<int> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  /// Keys under `prefix.` with the prefix removed.
  std::vector<std::pair<std::string, std::string>> section(const std::string& prefix) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Throws ConfigError for a key outside `known` and outside the given
  /// section prefixes.
  void check_keys(const std::vector<std::string>& known, const std::vector<std::string>& prefixes) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Parses "0.05,0.5" style lists.
std::vector<double> parse_double_list(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace sv

#endif  // SV_IO_HPP
