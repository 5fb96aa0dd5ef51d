#include "doctest.h"

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "vizgrade/harness.hpp"

#include <httplib.h>

#include <thread>

using namespace vizgrade;
using vizgrade::testing::read_all;
using vizgrade::testing::TempDir;

namespace {

Errc error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::FatalEnvironment;
}

std::string error_text(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

const char* kIndex = R"(<!doctype html>
<html><head>
<script src="https://d3js.org/d3.v5.min.js"></script>
<script src='lib/d3.v5.min.js?v=1'></script>
<link rel="stylesheet" href="style.css">
</head><body><script src="main.js"></script></body></html>
)";

SubmissionManifest basic_manifest(const TempDir& resources)
{
    resources.write("vendor/d3-5.16.0.min.js", "/* pinned d3 */");
    resources.write("data/sales.csv", "name,value\nA,1\n");
    SubmissionManifest m;
    m.required_files = {"index.html", "main.js", "style.css"};
    m.entry_point = "index.html";
    m.pinned_resources = {{"d3.v5.min.js", "vendor/d3-5.16.0.min.js"}};
    m.dataset_files = {{"data.csv", "data/sales.csv"}};
    m.resource_root = resources.path();
    return m;
}

void write_submission(const TempDir& sub)
{
    sub.write("index.html", kIndex);
    sub.write("main.js", "console.log('hi');\n");
    sub.write("style.css", "rect { fill: red; }\n");
}

std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).generic_string()] = read_all(entry.path());
    return out;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("manifest parsing and validation")
{
    auto doc = Json::parse(R"({"required_files": ["index.html", "js/app.js"],
        "pinned_resources": [{"match": "d3.min.js", "replacement": "v/d3.js"}],
        "dataset_files": [{"logical_name": "data.csv", "path": "d.csv"}]})");
    SubmissionManifest m = manifest_from_json(doc, "/res");
    CHECK(m.entry_point == "index.html");
    CHECK(m.required_files.size() == 2);
    CHECK(m.pinned_resources.at(0).match == "d3.min.js");
    CHECK(m.resource_root == fs::path("/res"));

    CHECK(error_of([] { manifest_from_json(Json::parse(R"({"required_files": ["a.html"]})"), "."); })
        == Errc::SchemaError); // entry point not required
    CHECK(error_of([] { manifest_from_json(Json::parse(R"({"entry_point": "a.html"})"), "."); }) == Errc::SchemaError);
    CHECK(error_of([] {
        manifest_from_json(Json::parse(R"({"required_files": ["index.html", "../x.js"]})"), ".");
    }) == Errc::PathEscape);
    CHECK(error_of([] { manifest_from_json(Json::parse(R"({"required_files": ["index.html", "/etc/passwd"]})"), "."); })
        == Errc::PathEscape);
    CHECK(error_of([] {
        manifest_from_json(
            Json::parse(R"({"required_files": ["index.html"], "pinned_resources": [{"match": "a/b.js", "replacement": "x"}]})"),
            ".");
    }) == Errc::SchemaError);
}

TEST_CASE("staging copies files, pins libraries and adds datasets")
{
    TempDir sub, res, stage;
    write_submission(sub);
    auto m = basic_manifest(res);
    StagedSite site = stage_submission(sub.path(), m, stage.path());

    CHECK(site.entry_point == "index.html");
    CHECK(site.base_url.empty());
    auto files = tree(site.root_dir);
    CHECK(files.size() == 5);
    CHECK(files.at("main.js") == "console.log('hi');\n");
    CHECK(files.at("vendor/d3.v5.min.js") == "/* pinned d3 */");
    CHECK(files.at("data.csv") == "name,value\nA,1\n");

    using Rewrite = std::pair<std::string, std::string>;
    CHECK(site.applied_rewrites
        == std::vector<Rewrite>{{"https://d3js.org/d3.v5.min.js", "vendor/d3.v5.min.js"},
            {"lib/d3.v5.min.js?v=1", "vendor/d3.v5.min.js"}});
    const std::string& index = files.at("index.html");
    CHECK(index.find("d3js.org") == std::string::npos);
    CHECK(index.find(R"(<script src="vendor/d3.v5.min.js"></script>)") != std::string::npos);
    CHECK(index.find(R"(<script src='vendor/d3.v5.min.js'></script>)") != std::string::npos);
    CHECK(index.find(R"(href="style.css")") != std::string::npos);
}

TEST_CASE("staging is idempotent")
{
    TempDir sub, res, stage;
    write_submission(sub);
    auto m = basic_manifest(res);
    stage.write("leftover.txt", "stale");
    stage_submission(sub.path(), m, stage.path());
    auto first = tree(stage.path());
    CHECK(first.count("leftover.txt") == 0);
    stage_submission(sub.path(), m, stage.path());
    CHECK(tree(stage.path()) == first);
}

TEST_CASE("missing files are all listed")
{
    TempDir sub, res, stage;
    sub.write("main.js", "");
    auto m = basic_manifest(res);
    std::string msg;
    try {
        stage_submission(sub.path(), m, stage.path());
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingFiles);
        msg = e.what();
    }
    CHECK(msg.find("index.html") != std::string::npos);
    CHECK(msg.find("style.css") != std::string::npos);
    CHECK(msg.find("main.js") == std::string::npos);

    SubmissionManifest only_index;
    only_index.required_files = {"index.html"};
    CHECK(error_of([&] { stage_submission(sub.path(), only_index, stage.path()); }) == Errc::MissingFiles);
}

TEST_CASE("references outside the submission root")
{
    TempDir sub, stage;
    SubmissionManifest m;
    m.required_files = {"index.html"};
    sub.write("index.html", R"(<script src="../../etc/passwd"></script>)");
    CHECK(error_of([&] { stage_submission(sub.path(), m, stage.path()); }) == Errc::PathEscape);

    sub.write("index.html", R"(<script src="a/../../x.js"></script>)");
    CHECK(error_of([&] { stage_submission(sub.path(), m, stage.path()); }) == Errc::PathEscape);

    // Staying inside is fine.
    sub.write("index.html", R"(<script src="a/../x.js"></script>)");
    CHECK_NOTHROW(stage_submission(sub.path(), m, stage.path()));

    TempDir outside;
    outside.write("secret.txt", "s");
    sub.write("index.html", "ok");
    fs::create_symlink(outside / "secret.txt", sub / "link.txt");
    m.required_files.push_back("link.txt");
    CHECK(error_of([&] { stage_submission(sub.path(), m, stage.path()); }) == Errc::PathEscape);
}

TEST_CASE("media types")
{
    CHECK(media_type_for("a.html") == "text/html; charset=utf-8");
    CHECK(media_type_for("a.JS") == "text/javascript; charset=utf-8");
    CHECK(media_type_for("a.css") == "text/css; charset=utf-8");
    CHECK(media_type_for("a.csv") == "text/csv; charset=utf-8");
    CHECK(media_type_for("a.json") == "application/json");
    CHECK(media_type_for("a.svg") == "image/svg+xml");
    CHECK(media_type_for("a.png") == "image/png");
    CHECK(media_type_for("a.bin") == "application/octet-stream");
}

TEST_CASE("serving staged sites")
{
    TempDir sub, res, stage;
    write_submission(sub);
    sub.write("main.js", std::string("binary\0bytes\n", 13));
    StagedSite staged = stage_submission(sub.path(), basic_manifest(res), stage.path());
    auto server = serve(staged);
    CHECK(server->site().base_url == "http://127.0.0.1:" + std::to_string(server->port()) + "/");

    httplib::Client client("127.0.0.1", server->port());
    auto entry = client.Get("/index.html");
    REQUIRE(entry);
    CHECK(entry->status == 200);
    CHECK(entry->body == read_all(staged.root_dir / "index.html"));
    CHECK(entry->get_header_value("Content-Type") == "text/html; charset=utf-8");

    auto js = client.Get("/main.js");
    REQUIRE(js);
    CHECK(js->body == std::string("binary\0bytes\n", 13));
    CHECK(js->get_header_value("Content-Type") == "text/javascript; charset=utf-8");

    auto data = client.Get("/data.csv");
    REQUIRE(data);
    CHECK(data->get_header_value("Content-Type") == "text/csv; charset=utf-8");

    auto root = client.Get("/");
    REQUIRE(root);
    CHECK(root->status == 200);

    for (const char* path : {"/nope.html", "/../etc/passwd", "/%2e%2e/%2e%2e/etc/passwd", "/vendor/../../x", "/vendor"}) {
        CAPTURE(path);
        auto r = client.Get(path);
        REQUIRE(r);
        CHECK(r->status == 404);
    }
}

TEST_CASE("symlinks out of the root are not served")
{
    TempDir stage, outside;
    outside.write("secret.txt", "secret");
    stage.write("index.html", "hi");
    fs::create_symlink(outside / "secret.txt", stage / "leak.txt");
    StagedSite site;
    site.root_dir = stage.path();
    site.entry_point = "index.html";
    auto server = serve(site);
    httplib::Client client("127.0.0.1", server->port());
    auto r = client.Get("/leak.txt");
    REQUIRE(r);
    CHECK(r->status == 404);
}

TEST_CASE("two sites at once")
{
    TempDir a, b;
    a.write("index.html", "A");
    b.write("index.html", "B");
    auto sa = serve(StagedSite{a.path(), "index.html", "", {}});
    auto sb = serve(StagedSite{b.path(), "index.html", "", {}});
    CHECK(sa->port() != sb->port());
    std::string got_a, got_b;
    std::thread ta([&] { got_a = httplib::Client("127.0.0.1", sa->port()).Get("/index.html")->body; });
    std::thread tb([&] { got_b = httplib::Client("127.0.0.1", sb->port()).Get("/index.html")->body; });
    ta.join();
    tb.join();
    CHECK(got_a == "A");
    CHECK(got_b == "B");
    CHECK(sa->entry_url() == sa->site().base_url + "index.html");
}

TEST_CASE("readiness examples")
{
    ReadinessPolicy policy;
    policy.required_anchors = {{".bar", 1}};
    int slept = 0;
    Sleeper fake = [&](int ms) { slept += ms; };

    std::vector<std::size_t> script{0, 1, 1};
    std::size_t i = 0;
    auto counts = [&] { return AnchorCounts{{".bar", script[std::min(i++, script.size() - 1)]}}; };
    RenderOutcome ready = await_counts(policy, counts, fake);
    CHECK(ready.ready);
    CHECK(ready.polls == 3);
    CHECK(slept == 2 * policy.poll_interval_ms);

    RenderOutcome never = await_counts(policy, [] { return AnchorCounts{{".bar", 0}}; }, fake);
    CHECK_FALSE(never.ready);
    CHECK(never.last_counts == AnchorCounts{{".bar", 0}});
    CHECK(never.polls == policy.timeout_ms / policy.poll_interval_ms + 1);

    int n = 0;
    RenderOutcome flappy = await_counts(policy, [&] { return AnchorCounts{{".bar", std::size_t(5 + (n++ % 2))}}; }, fake);
    CHECK_FALSE(flappy.ready);
}

TEST_CASE("readiness over scenes")
{
    ReadinessPolicy policy;
    policy.required_anchors = {{".bar", 6}};
    auto scene = load_snapshot_file(std::string(VIZGRADE_SOURCE_DIR) + "/tests/fixtures/bar/correct/page.scene.json");
    int calls = 0;
    auto snap = [&]() -> RenderedScene {
        if (calls++ == 0)
            throw Error(Errc::SchemaError, "probe not loaded yet");
        return scene;
    };
    RenderOutcome out = await_render(policy, snap, [](int) {});
    CHECK(out.ready);
    CHECK(out.polls == 3);
    CHECK(out.last_counts.at(".bar") == 6);
}

TEST_CASE("readiness policy validation")
{
    ReadinessPolicy p;
    p.stability_polls = 1;
    CHECK(error_of([&] { p.validate(); }) == Errc::SchemaError);
    p = {};
    p.timeout_ms = 10;
    p.poll_interval_ms = 20;
    CHECK(error_of([&] { p.validate(); }) == Errc::SchemaError);
    p = {};
    p.required_anchors = {{".x", 0}};
    CHECK(error_of([&] { p.validate(); }) == Errc::SchemaError);
    CHECK(error_text([&] { p.validate(); }).find(".x") != std::string::npos);
}

TEST_CASE("never ready before a stable satisfying run")
{
    testing::Rng rng(11);
    std::uniform_int_distribution<int> count(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        ReadinessPolicy policy;
        policy.required_anchors = {{"a", 1 + trial % 3}, {"b", 1}};
        policy.stability_polls = 2 + trial % 3;
        policy.poll_interval_ms = 100;
        policy.timeout_ms = 2000;
        std::vector<AnchorCounts> seen;
        auto fn = [&] {
            AnchorCounts c{{"a", std::size_t(count(rng))}, {"b", std::size_t(count(rng) > 0 ? 1 : 0)}};
            seen.push_back(c);
            return c;
        };
        RenderOutcome out = await_counts(policy, fn, [](int) {});
        REQUIRE(out.polls == static_cast<int>(seen.size()));
        if (!out.ready) {
            CHECK(out.polls == 21);
            continue;
        }
        const auto k = static_cast<std::size_t>(policy.stability_polls);
        REQUIRE(seen.size() >= k);
        for (std::size_t j = seen.size() - k; j < seen.size(); ++j) {
            CHECK(seen[j] == seen.back());
            CHECK(seen[j].at("a") >= std::size_t(policy.required_anchors[0].min_count));
            CHECK(seen[j].at("b") >= 1);
        }
    }
}

}
