#pragma once

#include "vizgrade/harness.hpp"
#include "vizgrade/rubric.hpp"
#include "vizgrade/webdriver.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vizgrade {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct Artifact {
    std::string kind; // "screenshot" or "scene_snapshot"
    std::string path;
};

struct EnvironmentInfo {
    std::string tool_version = std::string(kToolVersion);
    int viewport_width = 0;
    int viewport_height = 0;
    std::string driver; // "snapshot" or the endpoint URL
};

struct GradeReport {
    std::string submission_id;
    std::string timestamp;
    std::vector<CheckResult> results;
    double total = 0;
    double max = 0;
    std::vector<Artifact> artifacts;
    EnvironmentInfo environment;
    std::vector<std::string> notes; // pipeline remarks shown above the checks
};

struct GradeConfig {
    /// Snapshot mode when set: the browser stages are skipped.
    std::optional<fs::path> snapshot;
    /// Recorded interaction frames live in <dir>/<interaction id>/NN.scene.json.
    /// Defaults to the snapshot's directory.
    std::optional<fs::path> recordings;
    /// Live mode only.
    DriverEndpoint endpoint = DriverEndpoint::from_env();
    Capabilities capabilities;
    std::string probe_script;
    std::optional<fs::path> manifest;
    std::optional<fs::path> stage_dir;
    /// Artifacts are written here when set.
    std::optional<fs::path> out_dir;
    std::function<std::string()> clock; // defaults to UTC now
};

/// Runs the whole pipeline. Only an unreachable driver (live mode) throws,
/// as FatalEnvironment; everything else ends up as failed checks.
GradeReport grade(const fs::path& submission_dir, const Rubric& rubric, const GradeConfig& config);
GradeReport grade(const fs::path& submission_dir, const fs::path& rubric_file, const GradeConfig& config);

/// Reads <dir>/NN.scene.json frames in name order.
std::vector<RenderedScene> load_frames(const fs::path& dir);

std::string render_feedback(const GradeReport& report);
std::string emit_results_json(const GradeReport& report);

std::string utc_timestamp();

struct ScoreEntry {
    std::string timestamp;
    double total = 0;
};

struct ScoreHistory {
    std::vector<ScoreEntry> entries;

    /// Throws SchemaError when timestamps go backwards.
    void validate() const;
    /// Appends, clamping the timestamp so the order stays non-decreasing.
    void append(ScoreEntry entry);
};

ScoreHistory load_history(const fs::path& file); // missing file = empty history
void save_history(const ScoreHistory& history, const fs::path& file);

/// Flags a final total strictly below the best earlier total.
std::vector<std::string> flag_anomalies(const ScoreHistory& history);

} // namespace vizgrade
