// src/io.cc

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

#include "lrfuse/io.h"

#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

namespace lrfuse {

namespace {

std::string Location(const std::string& path, size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

double ParseDouble(const std::string& path, size_t line, const char* begin,
                   const char* end) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(Location(path, line) + "malformed number '" +
                     std::string(begin, end) + "'");
  return value;
}

double ParseDouble(const std::string& path, size_t line,
                   const std::string& token) {
  return ParseDouble(path, line, token.data(), token.data() + token.size());
}

// Parses whitespace-separated doubles into `out`; returns count consumed.
size_t ParseDoubleList(const std::string& path, size_t line,
                       const std::string& text, double* out, size_t max_count) {
  const char* p = text.data();
  const char* end = p + text.size();
  size_t count = 0;
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p >= end) break;
    const char* tok_end = p;
    while (tok_end < end && *tok_end != ' ') ++tok_end;
    if (count >= max_count)
      throw DimensionError(Location(path, line) + "too many values, expected " +
                           std::to_string(max_count));
    out[count++] = ParseDouble(path, line, p, tok_end);
    p = tok_end;
  }
  return count;
}

std::ifstream OpenForRead(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream OpenForWrite(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF everywhere
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void CheckWritten(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

void AppendFloat(std::string* line, double v, const char* fmt) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), fmt, v);
  line->append(buf);
}

void RequireFinite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

}  // namespace

std::string FormatFloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string FormatFloatExact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Corpus ParseIVectorFile(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(Location(path, 1) + "missing header line");
  int dim = 0;
  if (std::sscanf(line.c_str(), "#ivec v1 dim=%d", &dim) != 1 || dim < 1)
    throw ParseError(Location(path, 1) + "expected '#ivec v1 dim=<D>', got '" +
                     line + "'");

  Corpus corpus;
  corpus.dim = dim;
  std::unordered_set<std::string> seen_ids;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 4)
      throw ParseError(Location(path, line_no) +
                       "expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    IVectorRecord rec;
    rec.id = fields[0];
    if (rec.id.empty())
      throw ParseError(Location(path, line_no) + "empty record id");
    if (!seen_ids.insert(rec.id).second)
      throw DomainError(Location(path, line_no) + "duplicate id '" + rec.id +
                        "'");
    rec.duration_s = ParseDouble(path, line_no, fields[1]);
    if (!(rec.duration_s > 0.0))
      throw DomainError(Location(path, line_no) + "non-positive duration");
    if (fields[2] != "-") rec.label = fields[2];
    rec.vec.resize(dim);
    size_t got = ParseDoubleList(path, line_no, fields[3], rec.vec.data(),
                                 static_cast<size_t>(dim));
    if (got != static_cast<size_t>(dim))
      throw DimensionError(Location(path, line_no) + "expected " +
                           std::to_string(dim) + " vector entries, got " +
                           std::to_string(got));
    if (!rec.vec.allFinite())
      throw NumericError(Location(path, line_no) + "non-finite vector entry");
    corpus.records.push_back(std::move(rec));
  }
  corpus.Finalize();
  return corpus;
}

void WriteIVectorFile(const Corpus& corpus, const std::string& path) {
  if (corpus.dim < 1) throw DomainError("corpus dimension must be >= 1");
  std::ofstream out = OpenForWrite(path);
  out << "#ivec v1 dim=" << corpus.dim << "\n";
  std::string line;
  for (const IVectorRecord& rec : corpus.records) {
    if (rec.vec.size() != corpus.dim)
      throw DimensionError("record " + rec.id + " dimension mismatch");
    RequireFinite(rec.duration_s, "duration of " + rec.id);
    line.clear();
    line += rec.id;
    line += '\t';
    AppendFloat(&line, rec.duration_s, "%.9g");
    line += '\t';
    line += rec.labeled() ? rec.label : "-";
    line += '\t';
    for (int d = 0; d < corpus.dim; ++d) {
      if (d > 0) line += ' ';
      RequireFinite(rec.vec[d], "vector entry of " + rec.id);
      AppendFloat(&line, rec.vec[d], "%.9g");
    }
    line += '\n';
    out << line;
  }
  CheckWritten(out, path);
}

TrialScoreMatrix ParseScoreFile(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(Location(path, 1) + "missing header line");
  int num_langs = 0;
  char kind_name[32] = "gmm";  // older files omit the kind token
  const int matched = std::sscanf(line.c_str(), "#scores v1 langs=%d kind=%31s",
                                  &num_langs, kind_name);
  if (matched < 1 || num_langs < 1)
    throw ParseError(Location(path, 1) +
                     "expected '#scores v1 langs=<L> [kind=<kind>]', got '" +
                     line + "'");
  if (!std::getline(in, line))
    throw ParseError(Location(path, 2) + "missing language-name line");
  TrialScoreMatrix matrix;
  try {
    matrix.kind = ScoreKindFromName(kind_name);
  } catch (const DomainError&) {
    throw ParseError(Location(path, 1) + "unknown score kind '" +
                     std::string(kind_name) + "'");
  }
  matrix.languages = SplitTabs(line);
  if (matrix.languages.size() != static_cast<size_t>(num_langs))
    throw ParseError(Location(path, 2) + "expected " +
                     std::to_string(num_langs) + " language names, got " +
                     std::to_string(matrix.languages.size()));

  std::vector<double> durations;
  std::vector<double> values;
  size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2 + static_cast<size_t>(num_langs))
      throw ParseError(Location(path, line_no) + "expected " +
                       std::to_string(2 + num_langs) + " fields, got " +
                       std::to_string(fields.size()));
    matrix.ids.push_back(fields[0]);
    durations.push_back(ParseDouble(path, line_no, fields[1]));
    for (int l = 0; l < num_langs; ++l)
      values.push_back(ParseDouble(path, line_no, fields[2 + l]));
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(matrix.ids.size());
  matrix.durations = Eigen::Map<Vector>(durations.data(), rows);
  matrix.scores = Eigen::Map<RowMatrix>(values.data(), rows, num_langs);
  matrix.Validate();
  return matrix;
}

void WriteScoreFile(const TrialScoreMatrix& matrix, const std::string& path) {
  matrix.Validate();
  std::ofstream out = OpenForWrite(path);
  out << "#scores v1 langs=" << matrix.languages.size()
      << " kind=" << ScoreKindName(matrix.kind) << "\n";
  for (size_t l = 0; l < matrix.languages.size(); ++l) {
    if (l > 0) out << '\t';
    out << matrix.languages[l];
  }
  out << "\n";
  std::string line;
  for (size_t i = 0; i < matrix.ids.size(); ++i) {
    line.clear();
    line += matrix.ids[i];
    line += '\t';
    AppendFloat(&line, matrix.durations[static_cast<Eigen::Index>(i)], "%.9g");
    for (Eigen::Index l = 0; l < matrix.scores.cols(); ++l) {
      line += '\t';
      AppendFloat(&line, matrix.scores(static_cast<Eigen::Index>(i), l),
                  "%.9g");
    }
    line += '\n';
    out << line;
  }
  CheckWritten(out, path);
}

std::vector<Decision> ParseDecisionFile(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<Decision> decisions;
  std::string line;
  size_t line_no = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw ParseError(Location(path, line_no) +
                       "expected '<id>\\t<label>' line");
    if (!seen.insert(fields[0]).second)
      throw DomainError(Location(path, line_no) + "duplicate id '" +
                        fields[0] + "'");
    decisions.push_back({fields[0], fields[1]});
  }
  return decisions;
}

void WriteDecisionFile(const std::vector<Decision>& decisions,
                       const std::string& path) {
  std::ofstream out = OpenForWrite(path);
  for (const Decision& d : decisions) out << d.id << '\t' << d.label << '\n';
  CheckWritten(out, path);
}

std::vector<ScoreDurationPair> ParsePairFile(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<ScoreDurationPair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 4)
      throw ParseError(Location(path, line_no) +
                       "expected 4 tab-separated fields");
    ScoreDurationPair pair;
    pair.score = ParseDouble(path, line_no, fields[0]);
    pair.log_duration = ParseDouble(path, line_no, fields[1]);
    pair.language = fields[2];
    if (fields[3] == "target") {
      pair.target = true;
    } else if (fields[3] == "nontarget") {
      pair.target = false;
    } else {
      throw ParseError(Location(path, line_no) +
                       "expected 'target' or 'nontarget', got '" + fields[3] +
                       "'");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void WritePairFile(const std::vector<ScoreDurationPair>& pairs,
                   const std::string& path) {
  std::ofstream out = OpenForWrite(path);
  std::string line;
  for (const ScoreDurationPair& pair : pairs) {
    line.clear();
    AppendFloat(&line, pair.score, "%.9g");
    line += '\t';
    AppendFloat(&line, pair.log_duration, "%.9g");
    line += '\t';
    line += pair.language;
    line += '\t';
    line += pair.target ? "target" : "nontarget";
    line += '\n';
    out << line;
  }
  CheckWritten(out, path);
}

ModelWriter::ModelWriter(const std::string& path,
                         const std::string& model_type)
    : out_(OpenForWrite(path)), path_(path) {
  out_ << "#lrfuse " << model_type << " v1\n";
  Scalar("format_version", 1);
}

ModelWriter::~ModelWriter() {
  if (!closed_) out_.flush();
}

void ModelWriter::Scalar(const std::string& key, const std::string& value) {
  out_ << key << ' ' << value << '\n';
}

void ModelWriter::Scalar(const std::string& key, double value) {
  Scalar(key, FormatFloatExact(value));
}

void ModelWriter::Scalar(const std::string& key, int value) {
  Scalar(key, std::to_string(value));
}

void ModelWriter::Vec(const std::string& name, const Vector& v) {
  out_ << "vector " << name << ' ' << v.size() << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) line += ' ';
    AppendFloat(&line, v[i], "%.17g");
  }
  line += '\n';
  out_ << line;
}

void ModelWriter::Mat(const std::string& name, const RowMatrix& m) {
  out_ << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) line += ' ';
      AppendFloat(&line, m(r, c), "%.17g");
    }
    line += '\n';
    out_ << line;
  }
}

void ModelWriter::Strings(const std::string& name,
                          const std::vector<std::string>& items) {
  for (const std::string& item : items) {
    if (item.empty() || item.find_first_of(" \t\n") != std::string::npos)
      throw DomainError("string item '" + item + "' is not a plain token");
  }
  out_ << "strings " << name << ' ' << items.size() << '\n';
  std::string line;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) line += ' ';
    line += items[i];
  }
  line += '\n';
  out_ << line;
}

void ModelWriter::Close() {
  CheckWritten(out_, path_);
  closed_ = true;
}

ModelReader::ModelReader(const std::string& path,
                         const std::string& expected_type)
    : path_(path) {
  std::ifstream in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(Location(path, 1) + "missing model header");
  std::istringstream header(line);
  std::string hash, type, version;
  header >> hash >> type >> version;
  if (hash != "#lrfuse" || version != "v1")
    throw ParseError(Location(path, 1) + "not an lrfuse v1 model file");
  if (type != expected_type)
    throw ParseError(Location(path, 1) + "expected model type '" +
                     expected_type + "', got '" + type + "'");

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head == "vector") {
      std::string name;
      Eigen::Index n = -1;
      fields >> name >> n;
      if (name.empty() || n < 0)
        throw ParseError(Location(path, line_no) + "malformed vector header");
      if (!std::getline(in, line))
        throw ParseError(Location(path, line_no) + "missing vector data");
      ++line_no;
      Vector v(n);
      if (ParseDoubleList(path, line_no, line, v.data(),
                          static_cast<size_t>(n)) != static_cast<size_t>(n))
        throw DimensionError(Location(path, line_no) + "vector '" + name +
                             "' has wrong length");
      vectors_.emplace(name, std::move(v));
    } else if (head == "matrix") {
      std::string name;
      Eigen::Index rows = -1, cols = -1;
      fields >> name >> rows >> cols;
      if (name.empty() || rows < 0 || cols < 0)
        throw ParseError(Location(path, line_no) + "malformed matrix header");
      RowMatrix m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
          throw ParseError(Location(path, line_no) + "missing matrix row");
        ++line_no;
        if (ParseDoubleList(path, line_no, line, m.row(r).data(),
                            static_cast<size_t>(cols)) !=
            static_cast<size_t>(cols))
          throw DimensionError(Location(path, line_no) + "matrix '" + name +
                               "' row has wrong length");
      }
      matrices_.emplace(name, std::move(m));
    } else if (head == "strings") {
      std::string name;
      size_t n = 0;
      fields >> name >> n;
      if (!std::getline(in, line))
        throw ParseError(Location(path, line_no) + "missing strings data");
      ++line_no;
      std::istringstream items(line);
      std::vector<std::string> parsed;
      std::string item;
      while (items >> item) parsed.push_back(item);
      if (parsed.size() != n)
        throw DimensionError(Location(path, line_no) + "strings '" + name +
                             "' has wrong count");
      strings_.emplace(name, std::move(parsed));
    } else {
      std::string value;
      std::getline(fields, value);
      size_t start = value.find_first_not_of(' ');
      scalars_[head] = start == std::string::npos ? "" : value.substr(start);
    }
  }
  if (GetInt("format_version") != 1)
    throw ParseError(path + ": unsupported format_version");
}

std::string ModelReader::GetString(const std::string& key) const {
  auto it = scalars_.find(key);
  if (it == scalars_.end())
    throw ParseError(path_ + ": missing field '" + key + "'");
  return it->second;
}

double ModelReader::GetDouble(const std::string& key) const {
  const std::string text = GetString(key);
  return ParseDouble(path_, 0, text);
}

int ModelReader::GetInt(const std::string& key) const {
  return static_cast<int>(GetDouble(key));
}

bool ModelReader::HasKey(const std::string& key) const {
  return scalars_.count(key) > 0;
}

Vector ModelReader::GetVector(const std::string& name) const {
  auto it = vectors_.find(name);
  if (it == vectors_.end())
    throw ParseError(path_ + ": missing vector '" + name + "'");
  return it->second;
}

RowMatrix ModelReader::GetMatrix(const std::string& name) const {
  auto it = matrices_.find(name);
  if (it == matrices_.end())
    throw ParseError(path_ + ": missing matrix '" + name + "'");
  return it->second;
}

std::vector<std::string> ModelReader::GetStrings(
    const std::string& name) const {
  auto it = strings_.find(name);
  if (it == strings_.end())
    throw ParseError(path_ + ": missing strings '" + name + "'");
  return it->second;
}

}  // namespace lrfuse
