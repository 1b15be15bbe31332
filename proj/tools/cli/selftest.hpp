#pragma once

#include <optional>
#include <string>
#include <vector>

namespace semtrack::cli {

struct BatteryResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  // Deliberately corrupts the expected values of one battery.
  std::optional<std::string> inject_fault;
};

const std::vector<std::string>& battery_names();

// Throws ValidationError for an unknown name.
BatteryResult run_battery(const std::string& name, const SelftestOptions& options = {});

std::vector<BatteryResult> run_selftest(const std::vector<std::string>& names, const SelftestOptions& options = {});

}  // namespace semtrack::cli
