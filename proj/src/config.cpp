#include "stereosr/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stereosr {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& v, const std::string& key) {
  size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size())
    throw std::invalid_argument("config key " + key + ": bad number '" + v +
                                "'");
  return d;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config key " + key + ": bad bool '" + v + "'");
}

Range to_range(const std::string& v, const std::string& key) {
  std::istringstream is(v);
  Range r;
  if (!(is >> r.lo >> r.hi))
    throw std::invalid_argument("config key " + key + ": expected 'lo hi'");
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

DegradationConfig parse_degradation_config(const std::string& text) {
  DegradationConfig cfg;
  for (const auto& [key, val] : parse_kv(text)) {
    if (key == "scale") cfg.scale = static_cast<int>(to_double(val, key));
    else if (key == "blur_sigma_range") cfg.blur_sigma_range = to_range(val, key);
    else if (key == "kernel_size") cfg.kernel_size = static_cast<int>(to_double(val, key));
    else if (key == "anisotropic_prob") cfg.anisotropic_prob = to_double(val, key);
    else if (key == "resize_range") cfg.resize_range = to_range(val, key);
    else if (key == "noise_range") cfg.noise_range = to_range(val, key);
    else if (key == "poisson_scale_range") cfg.poisson_scale_range = to_range(val, key);
    else if (key == "jpeg_range") cfg.jpeg_range = to_range(val, key);
    else if (key == "sinc_prob") cfg.sinc_prob = to_double(val, key);
    else if (key == "sinc_cutoff_range") cfg.sinc_cutoff_range = to_range(val, key);
    else if (key == "skip_prob") cfg.skip_prob = to_double(val, key);
    else if (key == "enable_SO") cfg.enable_so = to_bool(val, key);
    else if (key == "enable_VB") cfg.enable_vb = to_bool(val, key);
    else if (key == "enable_VN") cfg.enable_vn = to_bool(val, key);
    else throw std::invalid_argument("unknown degradation config key: " + key);
  }
  cfg.validate();
  return cfg;
}

DegradationConfig load_degradation_config(const std::string& path) {
  return parse_degradation_config(read_file(path));
}

std::string serialize(const DegradationConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "scale = " << cfg.scale << "\n"
     << "blur_sigma_range = " << cfg.blur_sigma_range.lo << " "
     << cfg.blur_sigma_range.hi << "\n"
     << "kernel_size = " << cfg.kernel_size << "\n"
     << "anisotropic_prob = " << cfg.anisotropic_prob << "\n"
     << "resize_range = " << cfg.resize_range.lo << " " << cfg.resize_range.hi
     << "\n"
     << "noise_range = " << cfg.noise_range.lo << " " << cfg.noise_range.hi
     << "\n"
     << "poisson_scale_range = " << cfg.poisson_scale_range.lo << " "
     << cfg.poisson_scale_range.hi << "\n"
     << "jpeg_range = " << cfg.jpeg_range.lo << " " << cfg.jpeg_range.hi
     << "\n"
     << "sinc_prob = " << cfg.sinc_prob << "\n"
     << "sinc_cutoff_range = " << cfg.sinc_cutoff_range.lo << " "
     << cfg.sinc_cutoff_range.hi << "\n"
     << "skip_prob = " << cfg.skip_prob << "\n"
     << "enable_SO = " << (cfg.enable_so ? "true" : "false") << "\n"
     << "enable_VB = " << (cfg.enable_vb ? "true" : "false") << "\n"
     << "enable_VN = " << (cfg.enable_vn ? "true" : "false") << "\n";
  return os.str();
}

GeneratorConfig parse_generator_config(const std::string& text) {
  GeneratorConfig cfg;
  for (const auto& [key, val] : parse_kv(text)) {
    if (key == "width") cfg.width = static_cast<int>(to_double(val, key));
    else if (key == "n_blocks") cfg.n_blocks = static_cast<int>(to_double(val, key));
    else if (key == "scale") cfg.scale = static_cast<int>(to_double(val, key));
    else if (key == "tau") cfg.tau = to_double(val, key);
    else if (key == "bucket_count") cfg.bucket_count = static_cast<int>(to_double(val, key));
    else if (key == "scorer_capacity") cfg.scorer_capacity = static_cast<int>(to_double(val, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double(val, key));
    else if (key == "zero_init") cfg.zero_init = to_bool(val, key);
    else throw std::invalid_argument("unknown generator config key: " + key);
  }
  cfg.validate();
  return cfg;
}

GeneratorConfig load_generator_config(const std::string& path) {
  return parse_generator_config(read_file(path));
}

std::string serialize(const GeneratorConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "width = " << cfg.width << "\n"
     << "n_blocks = " << cfg.n_blocks << "\n"
     << "scale = " << cfg.scale << "\n"
     << "tau = " << cfg.tau << "\n"
     << "bucket_count = " << cfg.bucket_count << "\n"
     << "scorer_capacity = " << cfg.scorer_capacity << "\n"
     << "seed = " << cfg.seed << "\n"
     << "zero_init = " << (cfg.zero_init ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace stereosr
