// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/kv_file.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gas/common.hpp"

namespace gas {

std::string format_f64(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void KvDoc::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void KvDoc::set_f64(const std::string& key, double v) { set(key, format_f64(v)); }

void KvDoc::set_i64(const std::string& key, int64_t v) {
  set(key, std::to_string(v));
}

bool KvDoc::has(const std::string& key) const {
  for (auto& e : entries_)
    if (e.first == key) return true;
  return false;
}

const std::string& KvDoc::get(const std::string& key) const {
  for (auto& e : entries_)
    if (e.first == key) return e.second;
  fail(ErrorKind::parse, "missing field: " + key);
}

double KvDoc::get_f64(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail(ErrorKind::parse, "bad number for " + key + ": " + s);
  return v;
}

int64_t KvDoc::get_i64(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail(ErrorKind::parse, "bad integer for " + key + ": " + s);
  return v;
}

std::string KvDoc::serialize() const {
  std::string out;
  for (auto& e : entries_) {
    out += e.first;
    out += ' ';
    out += e.second;
    out += '\n';
  }
  return out;
}

KvDoc KvDoc::parse(const std::string& text) {
  KvDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      fail(ErrorKind::parse,
           "malformed line " + std::to_string(lineno) + ": " + line);
    std::string key = line.substr(0, sp);
    if (doc.has(key))
      fail(ErrorKind::parse, "duplicate key: " + key);
    doc.entries_.emplace_back(key, line.substr(sp + 1));
  }
  return doc;
}

void KvDoc::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::io, "cannot open for write: " + path);
  f << serialize();
  if (!f) fail(ErrorKind::io, "write failed: " + path);
}

KvDoc KvDoc::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::io, "cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace gas
