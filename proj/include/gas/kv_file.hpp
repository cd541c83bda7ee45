// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gas {

// Ordered key-value text document: one `key value` pair per line, keys
// unique, values written back verbatim. Doubles use 17 significant digits
// so files round-trip f64 exactly; save(load(f)) is byte-identical.
class KvDoc {
 public:
  void set(const std::string& key, const std::string& value);
  void set_f64(const std::string& key, double v);
  void set_i64(const std::string& key, int64_t v);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws parse
  double get_f64(const std::string& key) const;
  int64_t get_i64(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const;
  static KvDoc parse(const std::string& text);

  void save(const std::string& path) const;
  static KvDoc load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_f64(double v);

}  // namespace gas
