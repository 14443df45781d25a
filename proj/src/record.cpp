#include "signmix/record.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

namespace signmix {

namespace {

bool needs_escape(char c) {
  return c == '%' || c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '=' || c == ',';
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

}  // namespace

std::string encode_value(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (needs_escape(c)) {
      auto u = static_cast<unsigned char>(c);
      out.push_back('%');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xF]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string decode_value(std::string_view encoded) {
  std::string out;
  out.reserve(encoded.size());
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    char c = encoded[i];
    if (c != '%') {
      out.push_back(c);
      continue;
    }
    if (i + 2 >= encoded.size()) {
      throw std::invalid_argument("truncated escape in value");
    }
    int hi = hex_value(encoded[i + 1]);
    int lo = hex_value(encoded[i + 2]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad escape in value");
    out.push_back(static_cast<char>((hi << 4) | lo));
    i += 2;
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Record& Record::add(std::string key, std::string_view value) {
  fields_.push_back({std::move(key), encode_value(value), false});
  return *this;
}

Record& Record::add(std::string key, double value) {
  fields_.push_back({std::move(key), format_double(value), false});
  return *this;
}

Record& Record::add(std::string key, std::int64_t value) {
  fields_.push_back({std::move(key), std::to_string(value), false});
  return *this;
}

Record& Record::add(std::string key, bool value) {
  fields_.push_back({std::move(key), value ? "true" : "false", false});
  return *this;
}

Record& Record::add_list(std::string key, const std::vector<std::string>& items) {
  std::string joined;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) joined.push_back(',');
    joined += encode_value(items[i]);
  }
  fields_.push_back({std::move(key), std::move(joined), true});
  return *this;
}

Record& Record::add_doubles(std::string key, const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined.push_back(',');
    joined += format_double(values[i]);
  }
  fields_.push_back({std::move(key), std::move(joined), true});
  return *this;
}

const Record::Field* Record::field(std::string_view key) const {
  for (const auto& f : fields_) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

bool Record::has(std::string_view key) const { return field(key) != nullptr; }

std::optional<std::string> Record::find(std::string_view key) const {
  const auto* f = field(key);
  if (!f) return std::nullopt;
  return decode_value(f->encoded);
}

std::string Record::get(std::string_view key) const {
  const auto* f = field(key);
  if (!f) throw std::invalid_argument("missing field '" + std::string(key) + "' in " + kind_ + " record");
  return decode_value(f->encoded);
}

std::vector<std::string> Record::get_list(std::string_view key) const {
  const auto* f = field(key);
  if (!f) throw std::invalid_argument("missing field '" + std::string(key) + "' in " + kind_ + " record");
  std::vector<std::string> out;
  if (f->encoded.empty()) return out;
  for (auto part : split(f->encoded, ',')) out.push_back(decode_value(part));
  return out;
}

std::vector<double> Record::get_doubles(std::string_view key) const {
  std::vector<double> out;
  for (const auto& s : get_list(key)) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw std::invalid_argument("field '" + std::string(key) + "' has non-numeric item '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

double Record::get_double(std::string_view key) const {
  auto s = get(key);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("field '" + std::string(key) + "' is not a number: '" + s + "'");
  }
  return v;
}

std::int64_t Record::get_int(std::string_view key) const {
  auto s = get(key);
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("field '" + std::string(key) + "' is not an integer: '" + s + "'");
  }
  return v;
}

bool Record::get_bool(std::string_view key) const {
  auto s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("field '" + std::string(key) + "' is not a boolean: '" + s + "'");
}

void Record::expect_fields(std::initializer_list<std::string_view> keys) const {
  std::size_t i = 0;
  for (auto key : keys) {
    if (i >= fields_.size()) {
      throw std::invalid_argument(kind_ + " record: missing field '" + std::string(key) + "'");
    }
    if (fields_[i].key != key) {
      throw std::invalid_argument(kind_ + " record: expected field '" + std::string(key) + "' at position " +
                                  std::to_string(i + 1) + ", found '" + fields_[i].key + "'");
    }
    ++i;
  }
  if (i != fields_.size()) {
    throw std::invalid_argument(kind_ + " record: unknown field '" + fields_[i].key + "'");
  }
}

std::string Record::to_line() const {
  std::string out = kind_;
  for (const auto& f : fields_) {
    out.push_back(' ');
    out += f.key;
    out.push_back('=');
    out += f.encoded;
  }
  return out;
}

std::string Record::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_;
  for (const auto& f : fields_) {
    if (f.is_list) {
      auto arr = nlohmann::json::array();
      if (!f.encoded.empty()) {
        for (auto part : split(f.encoded, ',')) arr.push_back(decode_value(part));
      }
      j[f.key] = std::move(arr);
    } else {
      j[f.key] = decode_value(f.encoded);
    }
  }
  return j.dump();
}

Record Record::parse(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  auto tokens = split(line, ' ');
  if (tokens.empty() || tokens[0].empty()) throw std::invalid_argument("empty record kind");
  Record rec{std::string(tokens[0])};
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto tok = tokens[i];
    auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw std::invalid_argument("malformed field '" + std::string(tok) + "'");
    }
    auto key = std::string(tok.substr(0, eq));
    if (rec.has(key)) throw std::invalid_argument("duplicate field '" + key + "'");
    auto value = tok.substr(eq + 1);
    // validate escapes eagerly so errors surface with the line number
    for (auto part : split(value, ',')) (void)decode_value(part);
    rec.fields_.push_back({key, std::string(value), value.find(',') != std::string_view::npos});
  }
  return rec;
}

std::vector<NumberedRecord> read_records(std::istream& in) {
  std::vector<NumberedRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    try {
      out.push_back({lineno, Record::parse(line)});
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::vector<NumberedRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_records(in);
}

void write_records(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << r.to_line() << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void append_record_durable(const std::filesystem::path& path, const Record& record) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw IoError("cannot open " + path.string() + " for append");
  auto line = record.to_line() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw IoError("append failed for " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace signmix
