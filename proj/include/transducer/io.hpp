#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "transducer/dipoles.hpp"
#include "transducer/scenario.hpp"

namespace transducer {

// Locale-free shortest-exact decimal: up to 17 significant digits, '.'
// separator. All CSV output goes through this so byte-identical re-runs are
// a formatting guarantee, not an accident.
std::string format_double(double v);

// Minimal CSV assembly: comma separator, LF line endings, written in binary
// mode. Headers carry units; numeric cells use format_double.
class Csv {
  public:
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    const std::string& text() const { return text_; }
    void write(const std::string& path) const;

  private:
    std::string text_;
    std::size_t columns_ = 0;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Scenario <-> JSON. Reading is strict: unknown keys are ConfigErrors naming
// the full key path; omitted keys take module defaults and are recorded in
// `assumed`. The dark-state weight may be given as "abs_a_sq" (real A) or as
// "mix_a": [re, im].
nlohmann::json scenario_to_json(const ScatterScenario& sc);
ScatterScenario scenario_from_json(const nlohmann::json& j, const std::string& key_prefix,
                                   std::vector<std::string>* assumed = nullptr);

// One parsed run request: scenario + subcommand + its options. `variants`
// holds named scenario/option overrides for multi-curve figures (one output
// file per variant; empty means a single unnamed variant).
struct ParsedConfig {
    ScatterScenario scenario;
    std::string command;
    nlohmann::json options;                  // command-specific options (validated per command)
    std::vector<nlohmann::json> variants;    // each: {"name": ..., optional "scenario", "options"}
    std::vector<std::string> assumed;        // defaulted keys, "scenario.eta" style
    nlohmann::json resolved;                 // full config with defaults applied
};

ParsedConfig parse_config(const std::string& path);
ParsedConfig parse_config_json(const nlohmann::json& j, const std::string& source);

// Variant resolution: shallow key override of the base scenario/options.
// Paired spellings of the same logical field (e.g. "delta_omega" and
// "delta_omega_recip") displace one another instead of colliding.
nlohmann::json merge_scenario_json(const nlohmann::json& base, const nlohmann::json& over);
nlohmann::json merge_options_json(const nlohmann::json& base, const nlohmann::json& over);

struct ResolvedVariant {
    std::string name;  // empty for the single implicit variant
    ScatterScenario scenario;
    nlohmann::json options;
};

// Expands cfg.variants against the base scenario/options; a config without
// variants yields one entry with an empty name.
std::vector<ResolvedVariant> resolve_variants(const ParsedConfig& cfg);

// Built-in figure-style presets (fig2, fig3, fig4a..fig4d, fig5a..fig5c,
// fig6a, fig6d, fig7a, fig7b, fig8, fig10): returns a complete config
// document for parse_config_json.
std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);

// Keeps only the option keys the given command understands. Used when the
// CLI subcommand differs from the loaded config's command (e.g. running
// `criticality` on an efficiency-sweep preset); strict validation still
// applies to whatever survives.
nlohmann::json filter_options_for(const std::string& command, const nlohmann::json& options);

// Run metadata written next to every output file set. Self-contained:
// `transducer replay <manifest>` reproduces the CSV outputs byte for byte.
struct RunManifest {
    nlohmann::json doc;
    void write(const std::string& path) const;
};

RunManifest make_manifest(const ParsedConfig& cfg, const std::vector<std::string>& argv,
                          const std::vector<std::string>& outputs, double wall_seconds);

// Field-map serialization: CSV (x,y,z plus Re/Im of all six components) and
// a raw little-endian float64 block with a JSON sidecar describing layout
// (see docs/formats.md for the bit-exact layout).
void write_field_map_csv(const std::string& path, const FieldMap& map);
void write_field_map_binary(const std::string& base_path, const FieldMap& map);

}  // namespace transducer
