#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "wrapids/dataset.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("wrapids-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small file in the raw 45-column layout of the published UNSW-NB15 splits.
// Attacks favour udp, high source TTL and small payloads; the rest is noise.
inline std::string mini_unsw_csv(std::size_t rows, std::uint64_t seed, double attack_share = 0.6) {
  const wrapids::Schema schema = wrapids::unsw_nb15_raw_schema();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ostringstream os;
  for (std::size_t c = 0; c < schema.size(); ++c) os << (c ? "," : "") << schema[c].name;
  os << "\n";
  const char* protos_attack[] = {"udp", "unas", "tcp", "sctp"};
  const char* protos_normal[] = {"tcp", "udp", "arp", "ospf"};
  const char* services[] = {"-", "http", "dns", "ftp", "smtp"};
  const char* states[] = {"INT", "FIN", "CON", "REQ"};
  for (std::size_t r = 0; r < rows; ++r) {
    bool attack = u(gen) < attack_share;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) os << ",";
      const std::string& name = schema[c].name;
      if (name == "id") os << r + 1;
      else if (name == "proto") os << (attack ? protos_attack : protos_normal)[static_cast<int>(u(gen) * u(gen) * 4)];
      else if (name == "service") os << services[static_cast<int>(u(gen) * 5)];
      else if (name == "state") os << states[attack ? (u(gen) < 0.8 ? 0 : 1) : (u(gen) < 0.7 ? 1 : 2 + (u(gen) < 0.3))];
      else if (name == "attack_cat") os << (attack ? "Exploits" : "Normal");
      else if (name == "label") os << (attack ? 1 : 0);
      else if (name == "sttl") os << (attack ? (u(gen) < 0.85 ? 254 : 62) : (u(gen) < 0.85 ? 31 : 62));
      else if (name == "sbytes") os << static_cast<int>(attack ? 100 + u(gen) * 400 : 200 + u(gen) * 5000);
      else if (name == "is_ftp_login" || name == "is_sm_ips_ports") os << (u(gen) < 0.05 ? 1 : 0);
      else if (name == "dur") os << u(gen) * 3.0;
      else os << static_cast<int>(u(gen) * 50);
    }
    os << "\n";
  }
  return os.str();
}

inline std::vector<wrapids::Label> to_labels(const std::vector<int>& v) { return {v.begin(), v.end()}; }

// Dataset from named numeric columns plus labels.
inline wrapids::Dataset numeric_dataset(const std::vector<std::pair<std::string, std::vector<double>>>& cols,
                                        const std::vector<int>& labels) {
  std::vector<std::pair<std::string, wrapids::ColumnKind>> names;
  std::vector<wrapids::ColumnData> data;
  for (const auto& [n, v] : cols) {
    names.emplace_back(n, wrapids::ColumnKind::numeric);
    data.emplace_back(wrapids::NumericColumn{v});
  }
  names.emplace_back("label", wrapids::ColumnKind::label);
  data.emplace_back(wrapids::NumericColumn{});
  return wrapids::Dataset(wrapids::Schema::from_columns(std::move(names)), std::move(data), to_labels(labels));
}

}  // namespace testing_support
