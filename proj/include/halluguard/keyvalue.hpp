#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace halluguard {

// Flat "key = value" configuration. Blank lines and lines starting with '#'
// are ignored; duplicate keys and lines without '=' are errors.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Throws Error(kParse) naming the key when it is absent or malformed.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;

  // Throws Error(kParse) naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace halluguard
