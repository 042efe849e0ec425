#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wurl/batch.hpp"
#include "wurl/config.hpp"
#include "wurl/env.hpp"
#include "wurl/nn.hpp"

namespace wurl {

inline bool file_exists(const std::string& path) {
  return std::filesystem::exists(path);
}

inline void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory '" + path + "': " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so readers never observe a torn file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

inline Config Config::parse_file(const std::string& path) {
  return parse_text(read_file(path), path);
}

// State batches round-trip bit-exactly through %.17g.
inline std::string batch_to_text(const StateBatch& b) {
  std::string out = "statebatch " + std::to_string(b.size()) + " " + std::to_string(b.dim()) + "\n";
  char num[64];
  for (int i = 0; i < b.size(); ++i) {
    auto p = b.point(i);
    for (int d = 0; d < b.dim(); ++d) {
      std::snprintf(num, sizeof num, d + 1 == b.dim() ? "%.17g" : "%.17g ", p[std::size_t(d)]);
      out += num;
    }
    out += "\n";
  }
  return out;
}

inline void save_batch(const std::string& path, const StateBatch& b) {
  write_file_atomic(path, batch_to_text(b));
}

inline StateBatch batch_from_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string tag;
  int n = -1, dim = -1;
  if (!(in >> tag >> n >> dim) || tag != "statebatch" || n < 0 || dim < 1)
    throw ConfigError(origin + ": not a statebatch file");
  StateBatch b(dim);
  Vec row(std::size_t(dim), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d)
      if (!(in >> row[std::size_t(d)]))
        throw ConfigError(origin + ": truncated statebatch (row " + std::to_string(i) + ")");
    b.push_back(row);
  }
  return b;
}

inline StateBatch load_batch(const std::string& path) {
  return batch_from_text(read_file(path), path);
}

// Trajectory export: one header line, then per step
// "x y vx vy ax ay reward" at %.12g.
inline std::string trajectory_to_text(const Trajectory& t) {
  std::string out = "trajectory " + std::to_string(t.actions.size()) + " 4 2\n";
  char line[256];
  for (std::size_t i = 0; i < t.actions.size(); ++i) {
    auto o = t.visited.point(int(i));
    std::snprintf(line, sizeof line, "%.12g %.12g %.12g %.12g %.12g %.12g %.12g\n", o[0], o[1],
                  o[2], o[3], t.actions[i][0], t.actions[i][1], t.rewards[i]);
    out += line;
  }
  return out;
}

inline void save_trajectory(const std::string& path, const Trajectory& t) {
  write_file_atomic(path, trajectory_to_text(t));
}

// Actor checkpoint: architecture line, FNV hash of the parameters, then the
// parameters themselves at %.17g (bit-exact round trip).
inline std::string actor_ckpt_to_text(const Mlp& net) {
  std::string out = "actorckpt";
  for (int w : net.widths()) out += " " + std::to_string(w);
  out += "\n";
  char num[64];
  std::snprintf(num, sizeof num, "hash %016llx\n", (unsigned long long)net.param_hash());
  out += num;
  for (double p : net.params()) {
    std::snprintf(num, sizeof num, "%.17g\n", p);
    out += num;
  }
  return out;
}

inline void save_actor_ckpt(const std::string& path, const Mlp& net) {
  write_file_atomic(path, actor_ckpt_to_text(net));
}

// Loads checkpointed parameters into a compatible net and verifies the hash.
inline void load_actor_ckpt(const std::string& path, Mlp& into) {
  std::istringstream in(read_file(path));
  std::string tag;
  if (!(in >> tag) || tag != "actorckpt") throw ConfigError(path + ": not an actor checkpoint");
  std::string rest;
  std::getline(in, rest);
  std::istringstream ws(rest);
  std::vector<int> widths;
  for (int w; ws >> w;) widths.push_back(w);
  if (widths != into.widths())
    throw ConfigError(path + ": checkpoint architecture does not match the agent");
  std::string hash_hex;
  if (!(in >> tag >> hash_hex) || tag != "hash")
    throw ConfigError(path + ": missing checkpoint hash");
  Vec params;
  for (double p; in >> p;) params.push_back(p);
  if (int(params.size()) != into.n_params())
    throw ConfigError(path + ": wrong parameter count");
  std::uint64_t want = std::strtoull(hash_hex.c_str(), nullptr, 16);
  if (hash_doubles(params) != want)
    throw ConfigError(path + ": checkpoint hash mismatch (corrupt file)");
  into.params() = params;
}

// Append-only metrics stream, one flushed line per event so partial runs
// still leave a usable log.
class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path) : f_(std::fopen(path.c_str(), "a")) {
    if (!f_) throw ConfigError("cannot open metrics log '" + path + "'");
  }
  MetricsLog(const MetricsLog&) = delete;
  MetricsLog& operator=(const MetricsLog&) = delete;
  ~MetricsLog() {
    if (f_) std::fclose(f_);
  }

  void line(const std::string& s) {
    std::fprintf(f_, "%s\n", s.c_str());
    std::fflush(f_);
  }

 private:
  std::FILE* f_;
};

}  // namespace wurl
