#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "cytoseg/error.hpp"
#include "cytoseg/pipeline.hpp"

// Plain-text pipeline configuration: one `key = value` per line, `#` starts a
// comment, blank lines ignored. Keys not present keep their defaults.

namespace cytoseg {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (first != last && *first == '+') ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) return false;
  if constexpr (std::is_floating_point_v<T>) return std::isfinite(out);
  return true;
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct ConfigField {
  std::function<bool(PipelineConfig&, std::string_view)> parse;
  std::function<std::string(const PipelineConfig&)> format;
};

template <typename T>
ConfigField field(T PipelineConfig::*member) {
  return {[member](PipelineConfig& c, std::string_view s) { return parse_number(s, c.*member); },
          [member](const PipelineConfig& c) { return format_number(c.*member); }};
}

template <typename T>
ConfigField drlse_field(T DrlseParams::*member) {
  return {[member](PipelineConfig& c, std::string_view s) { return parse_number(s, c.drlse.*member); },
          [member](const PipelineConfig& c) { return format_number(c.drlse.*member); }};
}

// Key order here is the order format_config writes.
inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  static const std::vector<std::pair<std::string, ConfigField>> fields = {
      {"median_kernel", field(&PipelineConfig::median_kernel)},
      {"ahe_tiles", field(&PipelineConfig::ahe_tiles)},
      {"ahe_clip", field(&PipelineConfig::ahe_clip)},
      {"hmax_h", field(&PipelineConfig::hmax_h)},
      {"min_clump_area", field(&PipelineConfig::min_clump_area)},
      {"nucleus_prior", field(&PipelineConfig::nucleus_prior)},
      {"min_nucleus_area", field(&PipelineConfig::min_nucleus_area)},
      {"init_disc_margin", field(&PipelineConfig::init_disc_margin)},
      {"drlse_mu", drlse_field(&DrlseParams::mu)},
      {"drlse_dt", drlse_field(&DrlseParams::dt)},
      {"drlse_lambda", drlse_field(&DrlseParams::lambda)},
      {"drlse_balloon", drlse_field(&DrlseParams::balloon)},
      {"drlse_epsilon", drlse_field(&DrlseParams::epsilon)},
      {"drlse_c0", drlse_field(&DrlseParams::c0)},
      {"drlse_sigma", drlse_field(&DrlseParams::sigma)},
      {"drlse_max_iters", drlse_field(&DrlseParams::max_iters)},
      {"drlse_check_every", drlse_field(&DrlseParams::check_every)},
      {"drlse_converge_frac", drlse_field(&DrlseParams::converge_frac)},
      {"edf_window", field(&PipelineConfig::edf_window)},
  };
  return fields;
}

}  // namespace detail

/// Parses config text. Errors are config_error and name the 1-based line;
/// a repeated key is an error. The result is validated.
inline PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::config_error, "config line " + std::to_string(line_no) + ": " + why);
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected `key = value`");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty() || value.find('=') != std::string_view::npos) fail("expected `key = value`");
    const auto& fields = detail::config_fields();
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
    if (it == fields.end()) fail("unknown key `" + std::string(key) + "`");
    if (auto [s, fresh] = seen.emplace(std::string(key), line_no); !fresh) {
      fail("key `" + std::string(key) + "` already set on line " + std::to_string(s->second));
    }
    if (!it->second.parse(cfg, value)) fail("invalid value `" + std::string(value) + "` for `" + std::string(key) + "`");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorCode::unreadable_file, "cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every key, one per line, in shortest round-trip form.
inline std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [key, f] : detail::config_fields()) out += key + " = " + f.format(cfg) + "\n";
  return out;
}

}  // namespace cytoseg
