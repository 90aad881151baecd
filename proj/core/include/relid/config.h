// core/include/relid/config.h

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

#ifndef RELID_CONFIG_H_
#define RELID_CONFIG_H_

#include <map>
#include <set>
#include <string>
#include <vector>

namespace relid {

// UTF-8 key=value configuration. Blank lines and lines starting with '#'
// are ignored; whitespace around keys and values is trimmed. Later
// assignments override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig Parse(const std::string &text);
  static KeyValueConfig Load(const std::string &path);

  bool Has(const std::string &key) const;
  void Set(const std::string &key, const std::string &value);

  std::string GetString(const std::string &key, const std::string &def) const;
  double GetDouble(const std::string &key, double def) const;
  long GetInt(const std::string &key, long def) const;
  bool GetBool(const std::string &key, bool def) const;
  std::vector<double> GetDoubleList(const std::string &key,
                                    const std::vector<double> &def) const;

  // Throws Error(kConfig) naming the first key not in `known`.
  void RejectUnknown(const std::set<std::string> &known) const;

  // Serialized in key order; used for model directories.
  std::string ToString() const;
  const std::map<std::string, std::string> &entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace relid

#endif  // RELID_CONFIG_H_
