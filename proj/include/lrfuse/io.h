// include/lrfuse/io.h

// Copyright 2026  LRFuse Authors

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
//
// Text formats (UTF-8, LF):
//
//   i-vector file:  line 1 "#ivec v1 dim=<D>", then one record per line
//                   "<id>\t<duration_s>\t<label-or->\t<v1> <v2> ... <vD>"
//                   with "-" marking an unlabeled record.
//   score file:     line 1 "#scores v1 langs=<L> kind=<kind>" (kind one of
//                   cosine|gmm|dnn|fused|lr; omitted means gmm), line 2 the L
//                   language names tab-separated, then
//                   "<id>\t<dur>\t<s1>\t...\t<sL>".
//   decision file:  "<id>\t<language-or-out_of_set>" per line, no header.
//   pair file:      "<score>\t<log_dur>\t<language>\t<target|nontarget>".
//   model files:    "#lrfuse <type> v1" header, "format_version" field, then
//                   keyed scalars and named vector/matrix/string blocks.
//
// Data-file floats carry 9 significant digits (round-trip <= 1e-7 relative);
// model files carry 17 so reloaded models are bit-exact.

#ifndef LRFUSE_IO_H_
#define LRFUSE_IO_H_

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "lrfuse/types.h"

namespace lrfuse {

std::string FormatFloat(double v);       // %.9g, data files
std::string FormatFloatExact(double v);  // %.17g, model files

Corpus ParseIVectorFile(const std::string& path);
void WriteIVectorFile(const Corpus& corpus, const std::string& path);

TrialScoreMatrix ParseScoreFile(const std::string& path);
void WriteScoreFile(const TrialScoreMatrix& matrix, const std::string& path);

std::vector<Decision> ParseDecisionFile(const std::string& path);
void WriteDecisionFile(const std::vector<Decision>& decisions,
                       const std::string& path);

std::vector<ScoreDurationPair> ParsePairFile(const std::string& path);
void WritePairFile(const std::vector<ScoreDurationPair>& pairs,
                   const std::string& path);

// Writer for the keyed model format. Keys and block names must be unique
// per file; strings must be whitespace-free tokens.
class ModelWriter {
 public:
  ModelWriter(const std::string& path, const std::string& model_type);
  ~ModelWriter();

  void Scalar(const std::string& key, const std::string& value);
  void Scalar(const std::string& key, double value);
  void Scalar(const std::string& key, int value);
  void Vec(const std::string& name, const Vector& v);
  void Mat(const std::string& name, const RowMatrix& m);
  void Strings(const std::string& name, const std::vector<std::string>& items);
  void Close();  // flushes and verifies stream health

 private:
  std::ofstream out_;
  std::string path_;
  bool closed_ = false;
};

// Whole-file reader for the keyed model format; order-independent access.
class ModelReader {
 public:
  ModelReader(const std::string& path, const std::string& expected_type);

  std::string GetString(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  int GetInt(const std::string& key) const;
  bool HasKey(const std::string& key) const;
  Vector GetVector(const std::string& name) const;
  RowMatrix GetMatrix(const std::string& name) const;
  std::vector<std::string> GetStrings(const std::string& name) const;

 private:
  std::string path_;
  std::map<std::string, std::string> scalars_;
  std::map<std::string, Vector> vectors_;
  std::map<std::string, RowMatrix> matrices_;
  std::map<std::string, std::vector<std::string>> strings_;
};

}  // namespace lrfuse

#endif  // LRFUSE_IO_H_
