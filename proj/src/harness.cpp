#include "vizgrade/harness.hpp"

#include "httplib.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace vizgrade {

namespace {

bool escapes_root(const fs::path& relative)
{
    if (relative.empty() || relative.is_absolute() || relative.has_root_name() || relative.has_root_directory())
        return true;
    fs::path normal = relative.lexically_normal();
    return normal.empty() || *normal.begin() == "..";
}

void require_relative(const std::string& path, const std::string& what)
{
    if (path.empty())
        throw Error(Errc::SchemaError, what + " is empty");
    if (escapes_root(path))
        throw Error(Errc::PathEscape, what + " '" + path + "' leaves the submission root");
}

std::string read_file(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& file, const std::string& bytes)
{
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << bytes;
}

/// Component-wise prefix test on canonical paths.
bool is_within(const fs::path& root, const fs::path& candidate)
{
    auto r = root.begin();
    auto c = candidate.begin();
    for (; r != root.end(); ++r, ++c) {
        if (r->empty())
            continue; // trailing separator
        if (c == candidate.end() || *r != *c)
            return false;
    }
    return true;
}

struct QuotedString {
    std::size_t begin; // offset of first character inside the quotes
    std::size_t length;
};

std::vector<QuotedString> quoted_strings(const std::string& text)
{
    std::vector<QuotedString> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char q = text[i];
        if (q != '"' && q != '\'')
            continue;
        auto close = text.find(q, i + 1);
        auto newline = text.find('\n', i + 1);
        if (close == std::string::npos)
            break;
        if (newline < close)
            continue;
        out.push_back({i + 1, close - i - 1});
        i = close;
    }
    return out;
}

std::string reference_file_name(std::string_view ref)
{
    ref = ref.substr(0, ref.find_first_of("?#"));
    auto slash = ref.find_last_of('/');
    return std::string(slash == std::string_view::npos ? ref : ref.substr(slash + 1));
}

} // namespace

// ─── Manifest ───────────────────────────────────────────────────────────────

void SubmissionManifest::validate() const
{
    require_relative(entry_point, "entry_point");
    for (const auto& file : required_files)
        require_relative(file, "required file");
    if (std::find(required_files.begin(), required_files.end(), entry_point) == required_files.end())
        throw Error(Errc::SchemaError, "entry_point '" + entry_point + "' is not among required_files");
    for (const auto& pin : pinned_resources) {
        if (pin.match.empty() || pin.match.find('/') != std::string::npos)
            throw Error(Errc::SchemaError, "pinned resource match must be a bare file name, got '" + pin.match + "'");
        if (pin.replacement.empty())
            throw Error(Errc::SchemaError, "pinned resource '" + pin.match + "' has no replacement");
    }
    for (const auto& data : dataset_files) {
        require_relative(data.logical_name, "dataset logical name");
        if (data.path.empty())
            throw Error(Errc::SchemaError, "dataset '" + data.logical_name + "' has no path");
    }
}

SubmissionManifest manifest_from_json(const nlohmann::json& doc, const fs::path& resource_root)
{
    SubmissionManifest m;
    m.resource_root = resource_root;
    try {
        m.required_files = doc.at("required_files").get<std::vector<std::string>>();
        m.entry_point = doc.value("entry_point", std::string("index.html"));
        for (const auto& pin : doc.value("pinned_resources", nlohmann::json::array()))
            m.pinned_resources.push_back({pin.at("match").get<std::string>(), pin.at("replacement").get<std::string>()});
        for (const auto& data : doc.value("dataset_files", nlohmann::json::array()))
            m.dataset_files.push_back({data.at("logical_name").get<std::string>(), data.at("path").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaError, std::string("manifest: ") + e.what());
    }
    m.validate();
    return m;
}

SubmissionManifest load_manifest(const fs::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw Error(Errc::SchemaError, "cannot open manifest " + file.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw Error(Errc::SchemaError, "manifest " + file.string() + " is not valid JSON");
    return manifest_from_json(doc, file.parent_path());
}

// ─── Staging ────────────────────────────────────────────────────────────────

StagedSite stage_submission(const fs::path& submission_dir, const SubmissionManifest& manifest, const fs::path& stage_dir)
{
    manifest.validate();

    std::vector<std::string> missing;
    for (const auto& file : manifest.required_files)
        if (!fs::is_regular_file(submission_dir / file))
            missing.push_back(file);
    for (const auto& pin : manifest.pinned_resources)
        if (!fs::is_regular_file(manifest.resource_root / pin.replacement))
            missing.push_back(pin.replacement);
    for (const auto& data : manifest.dataset_files)
        if (!fs::is_regular_file(manifest.resource_root / data.path))
            missing.push_back(data.path);
    if (!missing.empty()) {
        std::string list;
        for (const auto& f : missing)
            list += (list.empty() ? "" : ", ") + f;
        throw Error(Errc::MissingFiles, list);
    }

    const fs::path source_root = fs::canonical(submission_dir);
    for (const auto& file : manifest.required_files)
        if (!is_within(source_root, fs::canonical(submission_dir / file)))
            throw Error(Errc::PathEscape, "'" + file + "' resolves outside the submission directory");

    // Entry page: reject parent-directory escapes, then apply pins.
    std::string entry = read_file(submission_dir / manifest.entry_point);
    const fs::path entry_dir = fs::path(manifest.entry_point).parent_path();
    StagedSite site;
    site.entry_point = manifest.entry_point;
    std::set<std::string> recorded;
    std::string rewritten;
    std::size_t copied_to = 0;
    for (const auto& q : quoted_strings(entry)) {
        std::string ref = entry.substr(q.begin, q.length);
        if (ref.find("..") != std::string::npos && ref.find("://") == std::string::npos) {
            fs::path target = (entry_dir / ref.substr(0, ref.find_first_of("?#"))).lexically_normal();
            if (!target.empty() && *target.begin() == "..")
                throw Error(Errc::PathEscape, "entry page references '" + ref + "' outside the submission root");
        }
        const std::string name = reference_file_name(ref);
        auto pin = std::find_if(manifest.pinned_resources.begin(), manifest.pinned_resources.end(),
            [&](const PinnedResource& p) { return p.match == name; });
        if (pin == manifest.pinned_resources.end())
            continue;
        std::string replacement = "vendor/" + pin->match;
        for (auto it = entry_dir.begin(); it != entry_dir.end(); ++it)
            replacement = "../" + replacement;
        rewritten += entry.substr(copied_to, q.begin - copied_to) + replacement;
        copied_to = q.begin + q.length;
        if (recorded.insert(ref).second)
            site.applied_rewrites.emplace_back(ref, replacement);
    }
    rewritten += entry.substr(copied_to);

    std::error_code ec;
    fs::remove_all(stage_dir, ec);
    fs::create_directories(stage_dir);
    site.root_dir = fs::canonical(stage_dir);

    for (const auto& file : manifest.required_files) {
        if (file == manifest.entry_point)
            write_file(site.root_dir / file, rewritten);
        else
            write_file(site.root_dir / file, read_file(submission_dir / file));
    }
    for (const auto& pin : manifest.pinned_resources)
        write_file(site.root_dir / "vendor" / pin.match, read_file(manifest.resource_root / pin.replacement));
    for (const auto& data : manifest.dataset_files)
        write_file(site.root_dir / data.logical_name, read_file(manifest.resource_root / data.path));
    return site;
}

// ─── Serving ────────────────────────────────────────────────────────────────

std::string media_type_for(const fs::path& file)
{
    static const std::map<std::string, std::string> types{
        {".html", "text/html; charset=utf-8"},
        {".htm", "text/html; charset=utf-8"},
        {".js", "text/javascript; charset=utf-8"},
        {".mjs", "text/javascript; charset=utf-8"},
        {".css", "text/css; charset=utf-8"},
        {".csv", "text/csv; charset=utf-8"},
        {".tsv", "text/tab-separated-values; charset=utf-8"},
        {".json", "application/json"},
        {".svg", "image/svg+xml"},
        {".png", "image/png"},
        {".txt", "text/plain; charset=utf-8"},
    };
    std::string ext = file.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    auto it = types.find(ext);
    return it == types.end() ? "application/octet-stream" : it->second;
}

struct SiteServer::Impl {
    httplib::Server server;
    std::thread thread;
};

namespace {

std::optional<fs::path> resolve_request(const fs::path& root, const std::string& request_path)
{
    if (request_path.empty() || request_path[0] != '/')
        return std::nullopt;
    if (request_path.find('\0') != std::string::npos || request_path.find('\\') != std::string::npos)
        return std::nullopt;

    fs::path relative;
    std::istringstream segments(request_path.substr(1));
    std::string segment;
    while (std::getline(segments, segment, '/')) {
        if (segment.empty() || segment == ".")
            continue;
        if (segment == ".." || segment.find(':') != std::string::npos)
            return std::nullopt;
        relative /= segment;
    }
    fs::path target = root / relative;
    std::error_code ec;
    if (fs::is_directory(target, ec))
        target /= "index.html";
    fs::path canonical = fs::canonical(target, ec);
    if (ec || !is_within(root, canonical) || !fs::is_regular_file(canonical, ec))
        return std::nullopt;
    return canonical;
}

} // namespace

SiteServer::SiteServer(StagedSite site)
    : impl_(std::make_unique<Impl>())
    , site_(std::move(site))
{
    const fs::path root = fs::canonical(site_.root_dir);
    auto handler = [root](const httplib::Request& req, httplib::Response& res) {
        auto file = resolve_request(root, req.path);
        if (!file) {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }
        res.status = 200;
        res.set_content(read_file(*file), media_type_for(*file));
    };
    impl_->server.Get(".*", handler);

    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0)
        throw Error(Errc::BindFailure, "no free loopback port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready(); // stop() before the loop starts would be lost
    site_.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/";
}

SiteServer::~SiteServer()
{
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

std::unique_ptr<SiteServer> serve(StagedSite site)
{
    return std::make_unique<SiteServer>(std::move(site));
}

// ─── Readiness ──────────────────────────────────────────────────────────────

void ReadinessPolicy::validate() const
{
    if (poll_interval_ms <= 0 || timeout_ms < poll_interval_ms)
        throw Error(Errc::SchemaError, "readiness timeout must be >= poll interval > 0");
    if (stability_polls < 2)
        throw Error(Errc::SchemaError, "stability_polls must be >= 2");
    for (const auto& anchor : required_anchors)
        if (anchor.min_count < 1)
            throw Error(Errc::SchemaError, "minimum count for '" + anchor.selector + "' must be >= 1");
}

void sleep_ms(int ms)
{
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

RenderOutcome await_counts(const ReadinessPolicy& policy, const std::function<AnchorCounts()>& counts_fn, const Sleeper& sleep)
{
    policy.validate();
    const int max_polls = policy.timeout_ms / policy.poll_interval_ms + 1;
    RenderOutcome outcome;
    int run = 0;
    for (int poll = 1; poll <= max_polls; ++poll) {
        if (poll > 1)
            sleep(policy.poll_interval_ms);
        AnchorCounts counts = counts_fn();
        run = (poll > 1 && counts == outcome.last_counts) ? run + 1 : 1;
        outcome.last_counts = std::move(counts);
        outcome.polls = poll;

        bool satisfied = true;
        for (const auto& anchor : policy.required_anchors) {
            auto it = outcome.last_counts.find(anchor.selector);
            if (it == outcome.last_counts.end() || it->second < static_cast<std::size_t>(anchor.min_count))
                satisfied = false;
        }
        if (satisfied && run >= policy.stability_polls) {
            outcome.ready = true;
            return outcome;
        }
    }
    return outcome;
}

RenderOutcome await_render(const ReadinessPolicy& policy, const std::function<RenderedScene()>& snapshot_fn, const Sleeper& sleep)
{
    return await_counts(
        policy,
        [&]() {
            AnchorCounts counts;
            for (const auto& anchor : policy.required_anchors)
                counts[anchor.selector] = 0;
            try {
                RenderedScene scene = snapshot_fn();
                for (const auto& anchor : policy.required_anchors)
                    counts[anchor.selector] = query(scene, anchor.selector).size();
            } catch (const Error&) {
            }
            return counts;
        },
        sleep);
}

} // namespace vizgrade
