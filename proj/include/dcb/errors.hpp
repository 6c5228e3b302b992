#pragma once

#include <stdexcept>
#include <string>

namespace dcb {

enum class Errc {
  invalid_range,
  invalid_policy,
  primary_busy,
  non_positive_distance,
  invalid_width,
  invalid_aggregation,
  wlan_active,
  state_explosion,
  no_link,
  singular_system,
  no_convergence,
  invalid_scenario,
  packing_failure,
  parse_error,
  schema_version_mismatch,
  zero_load,
  missing_metrics,
  usage_error,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_range: return "InvalidRange";
    case Errc::invalid_policy: return "InvalidPolicy";
    case Errc::primary_busy: return "PrimaryBusy";
    case Errc::non_positive_distance: return "NonPositiveDistance";
    case Errc::invalid_width: return "InvalidWidth";
    case Errc::invalid_aggregation: return "InvalidAggregation";
    case Errc::wlan_active: return "WlanActive";
    case Errc::state_explosion: return "StateExplosion";
    case Errc::no_link: return "NoLink";
    case Errc::singular_system: return "SingularSystem";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::invalid_scenario: return "InvalidScenario";
    case Errc::packing_failure: return "PackingFailure";
    case Errc::parse_error: return "ParseError";
    case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
    case Errc::zero_load: return "ZeroLoad";
    case Errc::missing_metrics: return "MissingMetrics";
    case Errc::usage_error: return "UsageError";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Library-wide exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace dcb
