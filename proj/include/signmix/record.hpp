#pragma once

// Line-delimited record format shared by manifests, vote logs, reports,
// metrics logs and checkpoints.
//
//   <kind> key1=value1 key2=value2 ...
//
// Values are percent-encoded for '%', ' ', '\t', '\r', '\n', '=' and ','.
// List values are comma-joined encoded items. Blank lines and lines starting
// with '#' are ignored by the reader.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace signmix {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_value(std::string_view raw);
std::string decode_value(std::string_view encoded);

// Shortest round-trip decimal form.
std::string format_double(double x);

class Record {
 public:
  Record() = default;
  explicit Record(std::string kind) : kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

  Record& add(std::string key, std::string_view value);
  Record& add(std::string key, const char* value) { return add(std::move(key), std::string_view(value)); }
  Record& add(std::string key, double value);
  Record& add(std::string key, std::int64_t value);
  Record& add(std::string key, int value) { return add(std::move(key), static_cast<std::int64_t>(value)); }
  Record& add(std::string key, std::size_t value) { return add(std::move(key), static_cast<std::int64_t>(value)); }
  Record& add(std::string key, bool value);
  Record& add_list(std::string key, const std::vector<std::string>& items);
  Record& add_doubles(std::string key, const std::vector<double>& values);

  bool has(std::string_view key) const;
  std::string get(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;

  // Throws std::invalid_argument unless the field keys match `keys` exactly, in order.
  void expect_fields(std::initializer_list<std::string_view> keys) const;

  std::string to_line() const;
  std::string to_json() const;

  static Record parse(std::string_view line);

  struct Field {
    std::string key;
    std::string encoded;
    bool is_list = false;
  };
  const std::vector<Field>& fields() const noexcept { return fields_; }

 private:
  const Field* field(std::string_view key) const;

  std::string kind_;
  std::vector<Field> fields_;
};

// Reads every record of a file; parse failures carry 1-based line numbers.
struct NumberedRecord {
  std::size_t line;
  Record record;
};
std::vector<NumberedRecord> read_records(const std::filesystem::path& path);
std::vector<NumberedRecord> read_records(std::istream& in);

void write_records(const std::filesystem::path& path, const std::vector<Record>& records);

// Appends a single record and flushes to stable storage before returning.
void append_record_durable(const std::filesystem::path& path, const Record& record);

}  // namespace signmix
