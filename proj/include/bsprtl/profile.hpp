#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bsprtl {

/// Modeled machine: tile counts, per-tile memory budgets and the constants of
/// the sync/exchange latency model. Bandwidths are bytes per machine cycle.
struct MachineProfile {
  std::string name = "ipu-m2000";
  std::uint32_t tiles_per_chip = 1472;
  std::uint32_t chips = 4;
  std::uint64_t data_mem_per_tile = 424 * 1024;
  std::uint64_t code_mem_per_tile = 200 * 1024;
  double sync_base = 150.0;
  double sync_slope = 15.0;
  double on_chip_bw = 7.7 * 1099511627776.0 / 1.35e9;
  double off_chip_bw = 107.0 * 1073741824.0 / 1.35e9;
  double per_message_overhead = 50.0;

  std::uint64_t total_tiles() const { return std::uint64_t{tiles_per_chip} * chips; }

  /// Named presets: `ipu-m2000`, `x86ish`. Throws UsageError for other names.
  static MachineProfile preset(std::string_view name);

  /// `key=value` lines over `base`; keys match the field names. Throws FormatError.
  static MachineProfile parse(std::string_view text);
  static MachineProfile parse(std::string_view text, MachineProfile base);

  /// Resolves a preset name, a file path, or a name found as `<dir>/<name>.profile`
  /// under $BSPRTL_PROFILE_DIR.
  static MachineProfile load(const std::string& name_or_path);

  std::string to_text() const;

  /// Throws FormatError unless every field is positive and off_chip_bw < on_chip_bw.
  void validate() const;
};

}  // namespace bsprtl
