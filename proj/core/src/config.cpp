#include "panoweave/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "panoweave/errors.hpp"

namespace panoweave {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw FormatError("config key " + key + ": expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw FormatError("config key " + key + ": expected number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw FormatError("config key " + key + ": expected unsigned integer, got '" + v + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (grid_height < 8 || grid_height % 8 != 0) {
    throw DomainError("grid.height must be a positive multiple of 8");
  }
  if (rig_n != 20) throw DomainError("rig.n must be 20");
  if (!(rig_fov > 0.0 && rig_fov < 180.0)) {
    throw DomainError("rig.fov must lie in (0, 180)");
  }
  if (!(eppa_sigma > 0.0)) throw DomainError("eppa.sigma must be positive");
  if (train_steps < 0) throw DomainError("train.steps must be non-negative");
  if (!(train_lr > 0.0)) throw DomainError("train.lr must be positive");
  if (sample_ddim_steps < 1) throw DomainError("sample.ddim_steps must be >= 1");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "grid.height") {
      cfg.grid_height = parse_int(key, value);
    } else if (key == "rig.n") {
      cfg.rig_n = parse_int(key, value);
    } else if (key == "rig.fov") {
      cfg.rig_fov = parse_double(key, value);
    } else if (key == "eppa.sigma") {
      cfg.eppa_sigma = parse_double(key, value);
    } else if (key == "train.steps") {
      cfg.train_steps = parse_int(key, value);
    } else if (key == "train.lr") {
      cfg.train_lr = parse_double(key, value);
    } else if (key == "sample.ddim_steps") {
      cfg.sample_ddim_steps = parse_int(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "paths.out") {
      cfg.out_dir = value;
    } else {
      throw FormatError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace panoweave
