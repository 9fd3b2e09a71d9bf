#include "bsprtl/profile.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "bsprtl/error.hpp"

namespace bsprtl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_number(std::string_view key, std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::FormatError, fmt::format("profile key '{}' has non-numeric value '{}'", key, text));
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read profile '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

MachineProfile MachineProfile::preset(std::string_view name) {
  MachineProfile p;
  if (name == "ipu-m2000") return p;
  if (name == "x86ish") {
    p.name = "x86ish";
    p.sync_base = 2000.0;
    p.sync_slope = 500.0;
    return p;
  }
  throw Error(ErrorCode::UsageError, fmt::format("unknown profile preset '{}'", name));
}

MachineProfile MachineProfile::parse(std::string_view text) { return parse(text, MachineProfile{}); }

MachineProfile MachineProfile::parse(std::string_view text, MachineProfile base) {
  MachineProfile p = std::move(base);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::FormatError, fmt::format("profile line {}: expected key=value", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "name") {
      p.name = std::string(value);
      continue;
    }
    const double v = to_number(key, value);
    if (key == "tiles_per_chip") {
      p.tiles_per_chip = static_cast<std::uint32_t>(v);
    } else if (key == "chips") {
      p.chips = static_cast<std::uint32_t>(v);
    } else if (key == "data_mem_per_tile") {
      p.data_mem_per_tile = static_cast<std::uint64_t>(v);
    } else if (key == "code_mem_per_tile") {
      p.code_mem_per_tile = static_cast<std::uint64_t>(v);
    } else if (key == "sync_base") {
      p.sync_base = v;
    } else if (key == "sync_slope") {
      p.sync_slope = v;
    } else if (key == "on_chip_bw") {
      p.on_chip_bw = v;
    } else if (key == "off_chip_bw") {
      p.off_chip_bw = v;
    } else if (key == "per_message_overhead") {
      p.per_message_overhead = v;
    } else {
      throw Error(ErrorCode::FormatError, fmt::format("profile line {}: unknown key '{}'", line_no, key));
    }
  }
  p.validate();
  return p;
}

MachineProfile MachineProfile::load(const std::string& name_or_path) {
  if (name_or_path == "ipu-m2000" || name_or_path == "x86ish") return preset(name_or_path);
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return parse(read_file(name_or_path));
  if (const char* dir = std::getenv("BSPRTL_PROFILE_DIR")) {
    for (const auto& candidate : {fs::path(dir) / name_or_path, fs::path(dir) / (name_or_path + ".profile")}) {
      if (fs::exists(candidate)) {
        MachineProfile base;
        base.name = name_or_path;
        return parse(read_file(candidate), base);
      }
    }
  }
  throw Error(ErrorCode::UsageError, fmt::format("profile '{}' is neither a preset nor a readable file", name_or_path));
}

std::string MachineProfile::to_text() const {
  return fmt::format(
      "name={}\ntiles_per_chip={}\nchips={}\ndata_mem_per_tile={}\ncode_mem_per_tile={}\nsync_base={}\n"
      "sync_slope={}\non_chip_bw={}\noff_chip_bw={}\nper_message_overhead={}\n",
      name, tiles_per_chip, chips, data_mem_per_tile, code_mem_per_tile, sync_base, sync_slope, on_chip_bw,
      off_chip_bw, per_message_overhead);
}

void MachineProfile::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::FormatError, fmt::format("invalid profile: {}", what)); };
  if (tiles_per_chip == 0) fail("tiles_per_chip must be positive");
  if (chips == 0) fail("chips must be positive");
  if (data_mem_per_tile == 0 || code_mem_per_tile == 0) fail("memory budgets must be positive");
  if (sync_base <= 0 || sync_slope < 0) fail("sync constants must be positive");
  if (on_chip_bw <= 0 || off_chip_bw <= 0) fail("bandwidths must be positive");
  if (off_chip_bw >= on_chip_bw) fail("off_chip_bw must be below on_chip_bw");
  if (per_message_overhead < 0) fail("per_message_overhead must be non-negative");
}

}  // namespace bsprtl
