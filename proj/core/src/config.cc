// core/src/config.cc

// Copyright 2026  relid contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "relid/config.h"

#include <fstream>
#include <sstream>

#include "relid/common.h"

namespace relid {
namespace {

std::string Trim(const std::string &s) {
  const char *ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(const std::string &text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      Fail(ErrorKind::kConfig,
           "line " + std::to_string(lineno) + ": expected key=value");
    std::string key = Trim(t.substr(0, eq));
    if (key.empty())
      Fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = Trim(t.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kMissingArtifact, "cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return Parse(ss.str());
}

bool KeyValueConfig::Has(const std::string &key) const {
  return kv_.count(key) > 0;
}

void KeyValueConfig::Set(const std::string &key, const std::string &value) {
  kv_[key] = value;
}

std::string KeyValueConfig::GetString(const std::string &key,
                                      const std::string &def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double KeyValueConfig::GetDouble(const std::string &key, double def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception &) {
    Fail(ErrorKind::kConfig, "key '" + key + "': not a number: " + it->second);
  }
}

long KeyValueConfig::GetInt(const std::string &key, long def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception &) {
    Fail(ErrorKind::kConfig, "key '" + key + "': not an integer: " + it->second);
  }
}

bool KeyValueConfig::GetBool(const std::string &key, bool def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string &v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Fail(ErrorKind::kConfig, "key '" + key + "': not a boolean: " + v);
}

std::vector<double> KeyValueConfig::GetDoubleList(
    const std::string &key, const std::vector<double> &def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    KeyValueConfig tmp;
    tmp.Set(key, Trim(item));
    out.push_back(tmp.GetDouble(key, 0.0));
  }
  return out;
}

void KeyValueConfig::RejectUnknown(const std::set<std::string> &known) const {
  for (const auto &[k, v] : kv_)
    if (!known.count(k)) Fail(ErrorKind::kConfig, "unknown key: " + k);
}

std::string KeyValueConfig::ToString() const {
  std::string out;
  for (const auto &[k, v] : kv_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace relid
