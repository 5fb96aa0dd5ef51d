#pragma once

#include "json.hpp"
#include "vizgrade/scene.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace vizgrade {

namespace fs = std::filesystem;

struct PinnedResource {
    std::string match;       // file name to look for in the entry page
    std::string replacement; // vendored copy, relative to resource_root
};

struct DatasetFile {
    std::string logical_name; // path inside the staged site
    std::string path;         // source, relative to resource_root
};

struct SubmissionManifest {
    std::vector<std::string> required_files;
    std::string entry_point = "index.html";
    std::vector<PinnedResource> pinned_resources;
    std::vector<DatasetFile> dataset_files;
    fs::path resource_root; // where pinned copies and datasets live

    /// Throws SchemaError or PathEscape.
    void validate() const;
};

SubmissionManifest manifest_from_json(const nlohmann::json& doc, const fs::path& resource_root);
SubmissionManifest load_manifest(const fs::path& file);

struct StagedSite {
    fs::path root_dir;
    std::string entry_point;
    std::string base_url; // empty until served
    std::vector<std::pair<std::string, std::string>> applied_rewrites;
};

/// Copies the manifest's files from `submission_dir` into `stage_dir`
/// (replacing its contents), rewrites pinned library references in the entry
/// page and adds dataset files under their logical names.
/// Throws MissingFiles (every absent file listed) or PathEscape.
StagedSite stage_submission(const fs::path& submission_dir, const SubmissionManifest& manifest, const fs::path& stage_dir);

std::string media_type_for(const fs::path& file);

/// Serves a staged site on 127.0.0.1 at an ephemeral port until destroyed.
/// Requests resolving outside root_dir (after symlink resolution) get 404.
class SiteServer {
public:
    explicit SiteServer(StagedSite site);
    ~SiteServer();
    SiteServer(const SiteServer&) = delete;
    SiteServer& operator=(const SiteServer&) = delete;

    const StagedSite& site() const { return site_; }
    int port() const { return port_; }
    std::string entry_url() const { return site_.base_url + site_.entry_point; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    StagedSite site_;
    int port_ = 0;
};

std::unique_ptr<SiteServer> serve(StagedSite site);

// ─── Render readiness ───────────────────────────────────────────────────────

struct AnchorRequirement {
    std::string selector;
    int min_count = 1;
};

struct ReadinessPolicy {
    std::vector<AnchorRequirement> required_anchors;
    int poll_interval_ms = 250;
    int timeout_ms = 10000;
    int stability_polls = 2;

    void validate() const;
};

using AnchorCounts = std::map<std::string, std::size_t>;

struct RenderOutcome {
    bool ready = false;
    int polls = 0;
    AnchorCounts last_counts;
};

using Sleeper = std::function<void(int ms)>;
void sleep_ms(int ms);

/// Polls `counts_fn` every poll_interval until every anchor meets its minimum
/// and the counts were identical for stability_polls consecutive polls.
/// Gives up after timeout / poll_interval + 1 polls.
RenderOutcome await_counts(const ReadinessPolicy& policy, const std::function<AnchorCounts()>& counts_fn,
    const Sleeper& sleep = sleep_ms);

/// Same, counting anchor matches in scenes returned by `snapshot_fn`. A
/// snapshot that fails to parse counts as zero matches everywhere.
RenderOutcome await_render(const ReadinessPolicy& policy, const std::function<RenderedScene()>& snapshot_fn,
    const Sleeper& sleep = sleep_ms);

} // namespace vizgrade
