// Command-line front end: grade, deconstruct, snapshot, replay.

#include "vizgrade/deconstruct.hpp"
#include "vizgrade/format.hpp"
#include "vizgrade/report.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace vizgrade;

namespace {

constexpr int kExitGraded = 0;
constexpr int kExitFatal = 2;
constexpr int kExitUsage = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw UsageError("cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& file, const std::string& text)
{
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw Error(Errc::FatalEnvironment, "cannot write " + file.string());
}

DriverEndpoint endpoint_for(const std::string& url)
{
    DriverEndpoint ep = url.empty() ? DriverEndpoint::from_env() : DriverEndpoint{url};
    if (const char* t = std::getenv("VIZGRADE_TIMEOUT_MS")) {
        auto ms = parse_double(t);
        if (!ms || *ms <= 0)
            throw UsageError("VIZGRADE_TIMEOUT_MS must be a positive number of milliseconds");
        ep.request_timeout_ms = static_cast<int>(*ms);
    }
    try {
        ep.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return ep;
}

Rubric rubric_or_usage(const fs::path& file)
{
    if (!fs::is_regular_file(file))
        throw UsageError("rubric not found: " + file.string());
    try {
        return load_rubric_file(file);
    } catch (const Error& e) {
        throw UsageError(std::string("invalid rubric: ") + e.what());
    }
}

struct Viewport2 {
    int w = 1280;
    int h = 800;
};

Viewport2 parse_viewport(const std::string& text)
{
    auto x = text.find('x');
    auto w = x == std::string::npos ? std::nullopt : parse_double(text.substr(0, x));
    auto h = x == std::string::npos ? std::nullopt : parse_double(text.substr(x + 1));
    if (!w || !h || *w < 1 || *h < 1)
        throw UsageError("viewport must look like 1280x800");
    return {static_cast<int>(*w), static_cast<int>(*h)};
}

/// Writes results and prints feedback; returns the exit code.
int publish(GradeReport report, const std::string& results_json, const std::string& out_dir, const std::string& history_file)
{
    if (!history_file.empty()) {
        ScoreHistory history = load_history(history_file);
        history.append({report.timestamp, report.total});
        save_history(history, history_file);
        for (auto& flag : flag_anomalies(history))
            report.notes.push_back("anomaly: " + flag);
    }
    std::string json = emit_results_json(report);
    if (!results_json.empty())
        write_text(results_json, json);
    else if (!out_dir.empty())
        write_text(fs::path(out_dir) / "results.json", json);
    std::cout << render_feedback(report);
    return kExitGraded;
}

Json channel_json(const ChannelValue& v)
{
    if (const double* d = std::get_if<double>(&v))
        return *d;
    return to_string(v);
}

Json model_params(const ScaleModel& m)
{
    return std::visit(
        [](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearParams>)
                return {{"slope", p.slope}, {"intercept", p.intercept}};
            else if constexpr (std::is_same_v<T, LogParams>)
                return {{"base", p.base}, {"slope", p.slope}, {"intercept", p.intercept}};
            else if constexpr (std::is_same_v<T, BandParams>)
                return {{"step", p.step}, {"bandwidth", p.bandwidth}, {"origin", p.origin}, {"domain", p.domain}};
            else {
                Json table = Json::object();
                for (const auto& [k, v] : p.table)
                    table[k] = channel_json(v);
                return {{"table", table}};
            }
        },
        m.params);
}

int run_deconstruct(const std::string& snapshot, const std::string& anchor, const std::string& key)
{
    if (!fs::is_regular_file(snapshot))
        throw UsageError("snapshot not found: " + snapshot);
    RenderedScene scene = load_snapshot_file(snapshot);
    MarkGroup group = extract_group(scene, anchor);

    Json marks = Json::array();
    std::vector<Json> rows;
    std::set<std::string> fields;
    std::set<std::string> channels;
    for (std::size_t i = 0; i < group.marks.size(); ++i) {
        const Mark& m = group.marks[i];
        Json ch = Json::object();
        for (const auto& [name, value] : m.channels) {
            ch[name] = channel_json(value);
            channels.insert(name);
        }
        Json entry = {{"index", i}, {"tag", scene.element(m.element).tag}, {"channels", ch}};
        if (m.datum) {
            entry["datum"] = *m.datum;
            rows.push_back(*m.datum);
            if (m.datum->is_object())
                for (const auto& [f, _] : m.datum->items())
                    fields.insert(f);
        }
        if (m.geometry)
            entry["bbox"] = {{"x", m.geometry->x}, {"y", m.geometry->y}, {"w", m.geometry->w}, {"h", m.geometry->h}};
        marks.push_back(std::move(entry));
    }

    Json encodings = Json::array();
    if (!rows.empty()) {
        BindResult binding = bind_data(group, rows, key.empty() ? std::nullopt : std::optional<std::string>(key));
        for (const auto& field : fields) {
            for (const auto& channel : channels) {
                if (channel == "text")
                    continue;
                try {
                    ScaleModel m = infer_scale(scale_pairs(group, binding, rows, field, channel), field, channel);
                    encodings.push_back({{"field", field}, {"channel", channel}, {"kind", std::string(to_string(m.kind()))},
                        {"residual", m.residual}, {"params", model_params(m)}});
                } catch (const Error&) {
                }
            }
        }
    }

    Json out = {{"anchor", anchor}, {"mark_tag", group.mark_tag}, {"marks", marks}, {"encodings", encodings}};
    std::cout << out.dump(2) << '\n';
    return kExitGraded;
}

int run_snapshot(const std::string& submission, const std::string& webdriver, const std::string& out_file,
    const std::string& probe_file, const std::string& manifest_file, const std::string& root, const Viewport2& vp)
{
    if (!fs::is_directory(submission))
        throw UsageError("submission directory not found: " + submission);
    std::string probe = read_text(probe_file);
    DriverEndpoint ep = endpoint_for(webdriver);

    SubmissionManifest manifest;
    if (!manifest_file.empty())
        manifest = load_manifest(manifest_file);
    else
        manifest.required_files = {manifest.entry_point};
    fs::path stage = fs::temp_directory_path() / ("vizgrade-snapshot-" + std::to_string(::getpid()));
    StagedSite site = stage_submission(submission, manifest, stage);
    auto server = serve(site);

    Capabilities caps;
    caps.viewport_width = vp.w;
    caps.viewport_height = vp.h;
    std::optional<ScopedSession> session;
    try {
        session.emplace(new_session(ep, caps));
    } catch (const Error& e) {
        throw Error(Errc::FatalEnvironment, std::string("browser driver unavailable: ") + e.what());
    }
    navigate(session->get(), server->entry_url());
    LivePlayer player(session->get(), probe, root);
    ReadinessPolicy policy;
    policy.required_anchors.push_back({root, 1});
    await_render(policy, [&] { return player.capture(); });
    write_text(out_file, serialize_snapshot(player.capture()));
    std::error_code ec;
    fs::remove_all(stage, ec);
    std::cout << "wrote " << out_file << '\n';
    return kExitGraded;
}

fs::path first_frame(const fs::path& dir)
{
    if (fs::is_regular_file(dir / "page.scene.json"))
        return dir / "page.scene.json";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().string().size() > 11
            && e.path().string().compare(e.path().string().size() - 11, 11, ".scene.json") == 0)
            files.push_back(e.path());
    if (files.empty())
        throw UsageError("no .scene.json frames in " + dir.string());
    std::sort(files.begin(), files.end());
    return files.front();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grades rendered web visualizations against a declarative rubric."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string submission, rubric_file, snapshot, recordings, webdriver, probe, manifest, out_dir, results_json, history;
    std::string anchor, key, out_file, root = "body", seq_dir, viewport = "1280x800", browser = "chrome";

    auto* grade_cmd = app.add_subcommand("grade", "Grade one submission");
    grade_cmd->add_option("--submission", submission, "Submission directory")->required();
    grade_cmd->add_option("--rubric", rubric_file, "Rubric JSON")->required();
    grade_cmd->add_option("--snapshot", snapshot, "Grade a stored .scene.json instead of a live page");
    grade_cmd->add_option("--recordings", recordings, "Recorded interaction frames (default: next to --snapshot)");
    grade_cmd->add_option("--webdriver", webdriver, "WebDriver endpoint (default: $VIZGRADE_WEBDRIVER_URL)");
    grade_cmd->add_option("--probe", probe, "Probe script run in the page to capture the scene");
    grade_cmd->add_option("--manifest", manifest, "Submission manifest JSON");
    grade_cmd->add_option("--browser", browser, "chrome or firefox");
    grade_cmd->add_option("--viewport", viewport, "WIDTHxHEIGHT");
    grade_cmd->add_option("--out", out_dir, "Artifact directory");
    grade_cmd->add_option("--results-json", results_json, "Where to write results.json");
    grade_cmd->add_option("--history", history, "Score history file to append to");

    auto* decon_cmd = app.add_subcommand("deconstruct", "Print the marks and encodings under an anchor");
    decon_cmd->add_option("--snapshot", snapshot, "Scene snapshot")->required();
    decon_cmd->add_option("--anchor", anchor, "Anchor selector")->required();
    decon_cmd->add_option("--key", key, "Datum field used to bind marks");

    auto* snap_cmd = app.add_subcommand("snapshot", "Capture a live page as .scene.json");
    snap_cmd->add_option("--submission", submission, "Submission directory")->required();
    snap_cmd->add_option("--webdriver", webdriver, "WebDriver endpoint")->required();
    snap_cmd->add_option("--out", out_file, "Output file")->required();
    snap_cmd->add_option("--probe", probe, "Probe script")->required();
    snap_cmd->add_option("--manifest", manifest, "Submission manifest JSON");
    snap_cmd->add_option("--root", root, "Root selector handed to the probe");
    snap_cmd->add_option("--viewport", viewport, "WIDTHxHEIGHT");

    auto* replay_cmd = app.add_subcommand("replay", "Grade a recorded snapshot sequence");
    replay_cmd->add_option("--snapshot-seq", seq_dir, "Directory of recorded frames")->required();
    replay_cmd->add_option("--rubric", rubric_file, "Rubric JSON")->required();
    replay_cmd->add_option("--results-json", results_json, "Where to write results.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*grade_cmd) {
            Rubric rubric = rubric_or_usage(rubric_file);
            GradeConfig config;
            if (!fs::is_directory(submission))
                throw UsageError("submission directory not found: " + submission);
            if (!snapshot.empty()) {
                if (!fs::is_regular_file(snapshot))
                    throw UsageError("snapshot not found: " + snapshot);
                config.snapshot = snapshot;
                if (!recordings.empty())
                    config.recordings = recordings;
            } else {
                if (probe.empty())
                    throw UsageError("live grading needs --probe (or use --snapshot)");
                config.probe_script = read_text(probe);
                config.endpoint = endpoint_for(webdriver);
                Viewport2 vp = parse_viewport(viewport);
                config.capabilities.viewport_width = vp.w;
                config.capabilities.viewport_height = vp.h;
                if (browser != "chrome" && browser != "firefox")
                    throw UsageError("--browser must be chrome or firefox");
                config.capabilities.browser_name = browser;
                if (!manifest.empty())
                    config.manifest = manifest;
            }
            if (!out_dir.empty())
                config.out_dir = out_dir;
            return publish(grade(submission, rubric, config), results_json, out_dir, history);
        }
        if (*decon_cmd)
            return run_deconstruct(snapshot, anchor, key);
        if (*snap_cmd)
            return run_snapshot(submission, webdriver, out_file, probe, manifest, root, parse_viewport(viewport));
        if (*replay_cmd) {
            Rubric rubric = rubric_or_usage(rubric_file);
            if (!fs::is_directory(seq_dir))
                throw UsageError("snapshot sequence directory not found: " + seq_dir);
            GradeConfig config;
            config.snapshot = first_frame(seq_dir);
            config.recordings = seq_dir;
            return publish(grade(seq_dir, rubric, config), results_json, "", "");
        }
    } catch (const UsageError& e) {
        std::cerr << "vizgrade: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "vizgrade: " << e.what() << '\n';
        if (e.code() == Errc::FatalEnvironment || e.code() == Errc::ConnectionFailed || e.code() == Errc::SessionNotCreated)
            return kExitFatal;
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "vizgrade: " << e.what() << '\n';
        return kExitFatal;
    }
    return kExitUsage;
}
