#include "vizgrade/report.hpp"

#include "vizgrade/format.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vizgrade {

namespace {

void write_file(const fs::path& file, std::string_view bytes)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::FatalEnvironment, "cannot write " + file.string());
}

std::string submission_name(const fs::path& dir)
{
    fs::path p = dir.lexically_normal();
    if (p.filename().empty())
        p = p.parent_path();
    return p.filename().string();
}

std::vector<CheckResult> fail_all(const Rubric& rubric, const std::string& reason)
{
    std::vector<CheckResult> out;
    for (const auto& check : rubric.checks) {
        CheckResult r;
        r.id = check.id;
        r.max_points = check.points;
        r.observed = "not evaluated";
        r.feedback = reason;
        out.push_back(std::move(r));
    }
    return out;
}

PlayerFactory recorded_players(const fs::path& root)
{
    return [root](const InteractionSpec& spec) -> std::unique_ptr<ScenePlayer> {
        fs::path dir = root / spec.id;
        if (!fs::is_directory(dir))
            return nullptr;
        auto frames = load_frames(dir);
        if (frames.empty())
            return nullptr;
        return std::make_unique<ScriptedPlayer>(std::move(frames));
    };
}

SubmissionManifest default_manifest(const fs::path& submission_dir)
{
    SubmissionManifest m;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(submission_dir, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_regular_file())
            m.required_files.push_back(fs::relative(it->path(), submission_dir).generic_string());
    }
    // The entry point is always required, so its absence reads as a missing file.
    if (std::find(m.required_files.begin(), m.required_files.end(), m.entry_point) == m.required_files.end())
        m.required_files.push_back(m.entry_point);
    std::sort(m.required_files.begin(), m.required_files.end());
    return m;
}

fs::path fresh_stage_dir()
{
    static std::atomic<int> counter{0};
    return fs::temp_directory_path()
        / ("vizgrade-stage-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

void finish(GradeReport& report)
{
    report.total = 0;
    for (const auto& r : report.results)
        report.total += r.points_awarded;
}

void grade_snapshot(GradeReport& report, const Rubric& rubric, const GradeConfig& config)
{
    report.environment.driver = "snapshot";
    std::optional<RenderedScene> loaded;
    try {
        loaded.emplace(load_snapshot_file(config.snapshot->string()));
    } catch (const Error& e) {
        report.results = fail_all(rubric, std::string("the page snapshot could not be read: ") + e.what());
        return;
    }
    const RenderedScene& scene = *loaded;
    report.environment.viewport_width = scene.viewport().width;
    report.environment.viewport_height = scene.viewport().height;

    if (config.out_dir) {
        fs::path copy = *config.out_dir / "page.scene.json";
        write_file(copy, serialize_snapshot(scene));
        report.artifacts.push_back({"scene_snapshot", copy.string()});
    } else {
        report.artifacts.push_back({"scene_snapshot", config.snapshot->string()});
    }

    fs::path recordings = config.recordings ? *config.recordings : config.snapshot->parent_path();
    Environment env = resolve_parameters(rubric, scene);
    report.results = run_checks(CheckContext{rubric, scene, env, recorded_players(recordings)});
}

void grade_live(GradeReport& report, const fs::path& submission_dir, const Rubric& rubric, const GradeConfig& config)
{
    if (config.probe_script.empty())
        throw std::invalid_argument("live grading needs a probe script");
    report.environment.driver = config.endpoint.base_url;
    report.environment.viewport_width = config.capabilities.viewport_width;
    report.environment.viewport_height = config.capabilities.viewport_height;

    // The driver comes first: a broken environment must not read as a bad submission.
    std::optional<ScopedSession> scoped;
    try {
        scoped.emplace(new_session(config.endpoint, config.capabilities));
    } catch (const Error& e) {
        throw Error(Errc::FatalEnvironment, std::string("browser driver unavailable: ") + e.what());
    }
    const Session& session = scoped->get();

    SubmissionManifest manifest = config.manifest ? load_manifest(*config.manifest) : default_manifest(submission_dir);
    const bool own_stage = !config.stage_dir;
    const fs::path stage_dir = own_stage ? fresh_stage_dir() : *config.stage_dir;
    struct Cleanup {
        bool active;
        fs::path dir;
        ~Cleanup()
        {
            std::error_code ec;
            if (active)
                fs::remove_all(dir, ec);
        }
    } cleanup{own_stage, stage_dir};

    StagedSite site;
    try {
        site = stage_submission(submission_dir, manifest, stage_dir);
    } catch (const Error& e) {
        report.results = fail_all(rubric, std::string("the submission could not be staged: ") + e.what());
        return;
    }

    std::unique_ptr<SiteServer> server;
    try {
        server = serve(site);
    } catch (const Error& e) {
        throw Error(Errc::FatalEnvironment, std::string("cannot serve the submission: ") + e.what());
    }


    const std::string url = server->entry_url();
    LivePlayer probe(session, config.probe_script, rubric.probe_root);
    auto load_page = [&]() -> bool {
        try {
            navigate(session, url);
        } catch (const Error& e) {
            if (e.code() == Errc::ConnectionFailed)
                throw Error(Errc::FatalEnvironment, std::string("browser driver went away: ") + e.what());
            report.notes.push_back(std::string("navigation problem: ") + e.what());
        }
        return await_render(rubric.readiness, [&] { return probe.capture(); }).ready;
    };

    if (!load_page())
        report.notes.push_back("the page did not finish rendering within " + std::to_string(rubric.readiness.timeout_ms)
            + " ms; grading what was rendered");

    std::optional<RenderedScene> captured;
    try {
        captured.emplace(probe.capture());
    } catch (const Error& e) {
        report.results = fail_all(rubric, std::string("the rendered page could not be captured: ") + e.what());
        return;
    }
    const RenderedScene& scene = *captured;
    if (config.out_dir) {
        fs::path file = *config.out_dir / "page.scene.json";
        write_file(file, serialize_snapshot(scene));
        report.artifacts.push_back({"scene_snapshot", file.string()});
    }

    // Every interaction starts from a freshly loaded page.
    PlayerFactory players = [&](const InteractionSpec&) -> std::unique_ptr<ScenePlayer> {
        release_actions(session);
        load_page();
        return std::make_unique<LivePlayer>(session, config.probe_script, rubric.probe_root);
    };
    Environment env = resolve_parameters(rubric, scene);
    report.results = run_checks(CheckContext{rubric, scene, env, players});

    if (config.out_dir) {
        try {
            load_page();
            auto png = take_screenshot(session);
            fs::path file = *config.out_dir / "screenshot.png";
            write_file(file, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
            report.artifacts.push_back({"screenshot", file.string()});
        } catch (const Error& e) {
            report.notes.push_back(std::string("no screenshot: ") + e.what());
        }
    }
}

} // namespace

std::string utc_timestamp()
{
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<RenderedScene> load_frames(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 11 && name.compare(name.size() - 11, 11, ".scene.json") == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RenderedScene> frames;
    for (const auto& f : files)
        frames.push_back(load_snapshot_file(f.string()));
    return frames;
}

GradeReport grade(const fs::path& submission_dir, const Rubric& rubric, const GradeConfig& config)
{
    GradeReport report;
    report.submission_id = submission_name(submission_dir);
    report.timestamp = config.clock ? config.clock() : utc_timestamp();
    report.max = rubric.max_points;
    if (config.out_dir)
        fs::create_directories(*config.out_dir);

    if (config.snapshot)
        grade_snapshot(report, rubric, config);
    else
        grade_live(report, submission_dir, rubric, config);
    finish(report);
    return report;
}

GradeReport grade(const fs::path& submission_dir, const fs::path& rubric_file, const GradeConfig& config)
{
    return grade(submission_dir, load_rubric_file(rubric_file), config);
}

std::string render_feedback(const GradeReport& report)
{
    std::ostringstream out;
    for (const auto& note : report.notes)
        out << "NOTE " << note << '\n';
    for (const auto& r : report.results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.id << " (" << format_number(r.points_awarded) << '/'
            << format_number(r.max_points) << ")";
        if (!r.feedback.empty())
            out << ": " << r.feedback;
        out << '\n';
    }
    out << "Total: " << format_number(report.total) << '/' << format_number(report.max) << '\n';
    return out.str();
}

std::string emit_results_json(const GradeReport& report)
{
    Json tests = Json::array();
    double sum = 0;
    for (const auto& r : report.results) {
        std::string output = r.feedback;
        if (!r.passed && (!r.expected.empty() || !r.observed.empty()))
            output += "\nexpected: " + r.expected + "\nobserved: " + r.observed;
        tests.push_back({
            {"name", r.id},
            {"score", r.points_awarded},
            {"max_score", r.max_points},
            {"output", output},
            {"visibility", "visible"},
        });
        sum += r.points_awarded;
    }

    std::string summary;
    for (const auto& note : report.notes)
        summary += note + "\n";
    summary += "Total: " + format_number(sum) + "/" + format_number(report.max);

    Json artifacts = Json::array();
    for (const auto& a : report.artifacts)
        artifacts.push_back({{"kind", a.kind}, {"path", a.path}});

    Json doc = {
        {"score", sum},
        {"output", summary},
        {"visibility", "visible"},
        {"tests", tests},
        {"extra_data",
            {
                {"submission_id", report.submission_id},
                {"max_score", report.max},
                {"artifacts", artifacts},
                {"environment",
                    {
                        {"tool_version", report.environment.tool_version},
                        {"viewport", {{"width", report.environment.viewport_width}, {"height", report.environment.viewport_height}}},
                        {"driver", report.environment.driver},
                    }},
            }},
    };
    return doc.dump(2) + "\n";
}

// ─── Score history ──────────────────────────────────────────────────────────

void ScoreHistory::validate() const
{
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].timestamp < entries[i - 1].timestamp)
            throw Error(Errc::SchemaError, "score history timestamps go backwards at entry " + std::to_string(i));
}

void ScoreHistory::append(ScoreEntry entry)
{
    if (!entries.empty() && entry.timestamp < entries.back().timestamp)
        entry.timestamp = entries.back().timestamp;
    entries.push_back(std::move(entry));
}

ScoreHistory load_history(const fs::path& file)
{
    ScoreHistory history;
    if (!fs::exists(file))
        return history;
    std::ifstream in(file);
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw Error(Errc::SchemaError, "score history " + file.string() + " is not a valid history file");
    for (const auto& e : doc["entries"]) {
        if (!e.is_object() || !e.contains("timestamp") || !e.contains("total") || !e["total"].is_number())
            throw Error(Errc::SchemaError, "malformed score history entry in " + file.string());
        history.entries.push_back({e["timestamp"].get<std::string>(), e["total"].get<double>()});
    }
    history.validate();
    return history;
}

void save_history(const ScoreHistory& history, const fs::path& file)
{
    Json entries = Json::array();
    for (const auto& e : history.entries)
        entries.push_back({{"timestamp", e.timestamp}, {"total", e.total}});
    write_file(file, Json{{"entries", entries}}.dump(2) + "\n");
}

std::vector<std::string> flag_anomalies(const ScoreHistory& history)
{
    if (history.entries.size() < 2)
        return {};
    double best = history.entries.front().total;
    for (std::size_t i = 1; i + 1 < history.entries.size(); ++i)
        best = std::max(best, history.entries[i].total);
    const double last = history.entries.back().total;
    if (last < best)
        return {"final score " + format_number(last) + " is lower than an earlier score of " + format_number(best)};
    return {};
}

} // namespace vizgrade
