#pragma once

// "key = value" configuration files. '#' starts a comment; keys are dotted
// (e.g. "plan.total_epochs").

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

namespace signmix {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(std::string_view text);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Entries under "prefix." with the prefix removed.
  Config section(const std::string& prefix) const;

  // Throws std::invalid_argument naming the first key not in `known`.
  void reject_unknown(std::initializer_list<std::string_view> known) const;

  // Sorted "key = value" lines; stable input to hashing.
  std::string canonical_text() const;
  std::uint64_t hash() const { return fnv1a64(canonical_text()); }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace signmix
