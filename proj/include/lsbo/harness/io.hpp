// Copyright 2026 The lsbo Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Trace files, metadata sidecars, hashing and atomic writes.
//
// Trace CSV columns:
//   iteration,eval_count,f_observed,f_best,gap,region_lo_0..,region_hi_0..
// with one region column pair per search dimension. Iteration 0 rows are the
// initial design. Numbers use %.17g so files round-trip exactly.

#pragma once

#include "lsbo/algorithms.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace lsbo::harness {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary and renames it into place.
inline void write_file_atomic(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ostringstream tag;
  tag << std::this_thread::get_id();
  const fs::path tmp = p.string() + ".tmp." + tag.str();
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << bytes;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

inline std::string trace_csv(const RunTrace& t) {
  std::ostringstream os;
  os << "iteration,eval_count,f_observed,f_best,gap";
  for (Eigen::Index i = 0; i < t.search_dim; ++i) os << ",region_lo_" << i;
  for (Eigen::Index i = 0; i < t.search_dim; ++i) os << ",region_hi_" << i;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.iteration << ',' << r.eval_count << ',' << fmt_double(r.f) << ','
       << fmt_double(r.f_best) << ',' << fmt_double(r.gap);
    for (Eigen::Index i = 0; i < r.region.dim(); ++i) os << ',' << fmt_double(r.region.lo[i]);
    for (Eigen::Index i = 0; i < r.region.dim(); ++i) os << ',' << fmt_double(r.region.hi[i]);
    os << '\n';
  }
  return os.str();
}

inline std::string timing_csv(const RunTrace& t) {
  std::ostringstream os;
  os << "eval_count,seconds\n";
  for (const auto& r : t.rows) os << r.eval_count << ',' << fmt_double(r.seconds) << '\n';
  return os.str();
}

/// Fields the profile and plot commands need, stored next to each trace.
struct TraceMeta {
  std::string run;
  std::string algorithm;
  std::string solver;
  std::string problem;
  std::string instance;
  double f_star = 0.0;
  bool has_f_star = true;
  long n_p = 0;
  long search_dim = 0;
  std::uint64_t seed = 0;
  long n_initial = 0;
};

inline std::string meta_json(const TraceMeta& m) {
  json j;
  j["run"] = m.run;
  j["algorithm"] = m.algorithm;
  j["solver"] = m.solver;
  j["problem"] = m.problem;
  j["instance"] = m.instance;
  if (m.has_f_star) j["f_star"] = m.f_star;
  j["n_p"] = m.n_p;
  j["search_dim"] = m.search_dim;
  j["seed"] = m.seed;
  j["n_initial"] = m.n_initial;
  return j.dump(2) + "\n";
}

inline TraceMeta parse_meta(const std::string& text) {
  const json j = json::parse(text);
  TraceMeta m;
  m.run = j.value("run", "");
  m.algorithm = j.value("algorithm", "");
  m.solver = j.value("solver", m.algorithm);
  m.problem = j.value("problem", "");
  m.instance = j.value("instance", m.problem);
  m.has_f_star = j.contains("f_star") && j["f_star"].is_number();
  if (m.has_f_star) m.f_star = j["f_star"].get<double>();
  m.n_p = j.value("n_p", 0L);
  m.search_dim = j.value("search_dim", 0L);
  m.seed = j.value("seed", std::uint64_t{0});
  m.n_initial = j.value("n_initial", 0L);
  return m;
}

/// The columns of a trace CSV that downstream tools consume.
struct TraceTable {
  std::vector<long> iteration;
  std::vector<double> f_observed;
  std::vector<double> f_best;
};

inline TraceTable parse_trace_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("iteration,eval_count,f_observed,f_best", 0) != 0) {
    throw std::runtime_error("not a trace CSV");
  }
  TraceTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    for (int c = 0; c < 4 && std::getline(ls, cell, ','); ++c) cells.push_back(cell);
    if (cells.size() < 4) throw std::runtime_error("short trace row: " + line);
    t.iteration.push_back(std::stol(cells[0]));
    t.f_observed.push_back(std::stod(cells[2]));
    t.f_best.push_back(std::stod(cells[3]));
  }
  return t;
}

/// One stored trace: metadata plus its table.
struct StoredTrace {
  fs::path csv;
  TraceMeta meta;
  TraceTable table;

  double initial_best() const {
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.iteration.size(); ++i) {
      if (table.iteration[i] == 0) b = std::min(b, table.f_observed[i]);
    }
    return b;
  }

  std::vector<double> loop_history() const {
    std::vector<double> h;
    for (std::size_t i = 0; i < table.iteration.size(); ++i) {
      if (table.iteration[i] > 0) h.push_back(table.f_best[i]);
    }
    return h;
  }
};

/// Every `*.csv` with a matching `*.meta.json` below dir, in path order.
inline std::vector<StoredTrace> load_traces(const fs::path& dir) {
  std::vector<fs::path> csvs;
  if (!fs::exists(dir)) throw std::runtime_error("no such directory: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto& p = e.path();
    if (!e.is_regular_file() || p.extension() != ".csv") continue;
    fs::path meta = p;
    meta.replace_extension(".meta.json");
    if (fs::exists(meta)) csvs.push_back(p);
  }
  std::sort(csvs.begin(), csvs.end());
  std::vector<StoredTrace> out;
  for (const auto& p : csvs) {
    fs::path meta = p;
    meta.replace_extension(".meta.json");
    out.push_back({p, parse_meta(read_file(meta)), parse_trace_csv(read_file(p))});
  }
  return out;
}

}  // namespace lsbo::harness
