#include "vizgrade/webdriver.hpp"

#include "httplib.h"

#include <cstdlib>

namespace vizgrade {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host:port
    std::string prefix; // path prefix without trailing '/'
};

SplitUrl split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos)
        out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/')
        out.prefix.pop_back();
    return out;
}

enum class Op { NewSession, Navigate, Other };

Errc classify_driver_error(const std::string& error, Op op)
{
    if (op == Op::NewSession)
        return Errc::SessionNotCreated;
    if (error == "invalid session id")
        return Errc::StaleSession;
    if (error == "javascript error")
        return Errc::ScriptError;
    if (op == Op::Navigate && (error == "timeout" || error == "script timeout"))
        return Errc::NavigationTimeout;
    return Errc::DriverError;
}

Json call(const DriverEndpoint& endpoint, const std::string& method, const std::string& path, const Json* body, Op op)
{
    auto url = split_url(endpoint.base_url);
    if (url.origin.rfind("https://", 0) == 0)
        throw Error(Errc::ConnectionFailed, "https endpoints are not supported: " + endpoint.base_url);

    httplib::Client client(url.origin);
    auto as_timeval = [](int ms) { return std::pair<time_t, time_t>(ms / 1000, (ms % 1000) * 1000); };
    auto [cs, cus] = as_timeval(endpoint.connect_timeout_ms);
    auto [rs, rus] = as_timeval(endpoint.request_timeout_ms);
    client.set_connection_timeout(cs, cus);
    client.set_read_timeout(rs, rus);
    client.set_write_timeout(rs, rus);

    const std::string full_path = url.prefix + path;
    httplib::Result res;
    if (method == "GET")
        res = client.Get(full_path);
    else if (method == "DELETE")
        res = client.Delete(full_path);
    else
        res = client.Post(full_path, body ? body->dump() : std::string("{}"), "application/json");

    if (!res) {
        auto err = res.error();
        const std::string where = method + " " + full_path + ": " + httplib::to_string(err);
        if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout
            || err == httplib::Error::BindIPAddress || err == httplib::Error::ProxyConnection)
            throw Error(Errc::ConnectionFailed, where);
        if (err == httplib::Error::Read && op == Op::Navigate)
            throw Error(Errc::NavigationTimeout, where);
        if (op == Op::NewSession)
            throw Error(Errc::SessionNotCreated, where);
        throw Error(Errc::DriverError, where);
    }

    Json doc = Json::parse(res->body, nullptr, false);
    const bool ok = res->status >= 200 && res->status < 300;
    if (!ok) {
        std::string error = "unknown error";
        std::string message = res->body;
        if (!doc.is_discarded() && doc.contains("value") && doc["value"].is_object()) {
            const auto& value = doc["value"];
            error = value.value("error", error);
            message = value.value("message", message);
        }
        throw Error(classify_driver_error(error, op),
            method + " " + full_path + " -> HTTP " + std::to_string(res->status) + " " + error + ": " + message);
    }
    if (doc.is_discarded())
        throw Error(op == Op::NewSession ? Errc::SessionNotCreated : Errc::DriverError,
            method + " " + full_path + ": response is not JSON");
    return doc.contains("value") ? doc["value"] : Json();
}

std::string session_path(const Session& session)
{
    return "/session/" + session.session_id;
}

} // namespace

DriverEndpoint DriverEndpoint::from_env(const std::string& fallback)
{
    DriverEndpoint endpoint;
    const char* env = std::getenv("VIZGRADE_WEBDRIVER_URL");
    endpoint.base_url = env && *env ? env : fallback;
    return endpoint;
}

void DriverEndpoint::validate() const
{
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
        throw Error(Errc::ConnectionFailed, "endpoint '" + base_url + "' is not an http(s) URL");
    if (connect_timeout_ms <= 0 || request_timeout_ms <= 0)
        throw Error(Errc::ConnectionFailed, "endpoint timeouts must be positive");
}

Json Capabilities::to_w3c() const
{
    const std::string size = std::to_string(viewport_width) + "," + std::to_string(viewport_height);
    Json always = {
        {"browserName", browser_name},
        {"vizgrade:viewport", {{"width", viewport_width}, {"height", viewport_height}}},
    };
    if (browser_name == "chrome" || browser_name == "chromium") {
        Json args = {"--window-size=" + size, "--hide-scrollbars"};
        if (headless)
            args.push_back("--headless=new");
        always["goog:chromeOptions"] = {{"args", args}};
    } else if (browser_name == "firefox") {
        Json args = {"--width=" + std::to_string(viewport_width), "--height=" + std::to_string(viewport_height)};
        if (headless)
            args.push_back("-headless");
        always["moz:firefoxOptions"] = {{"args", args}};
    }
    always.update(extra);
    return {{"alwaysMatch", always}, {"firstMatch", Json::array({Json::object()})}};
}

Session new_session(const DriverEndpoint& endpoint, const Capabilities& capabilities)
{
    endpoint.validate();
    if (capabilities.viewport_width < 1 || capabilities.viewport_height < 1)
        throw Error(Errc::SessionNotCreated, "viewport must be at least 1x1");
    Json body = {{"capabilities", capabilities.to_w3c()}};
    Json value = call(endpoint, "POST", "/session", &body, Op::NewSession);
    if (!value.is_object() || !value.contains("sessionId") || !value["sessionId"].is_string()
        || value["sessionId"].get<std::string>().empty())
        throw Error(Errc::SessionNotCreated, "driver response carries no sessionId");
    return Session{value["sessionId"].get<std::string>(), endpoint, capabilities};
}

void delete_session(const Session& session)
{
    call(session.endpoint, "DELETE", session_path(session), nullptr, Op::Other);
}

void navigate(const Session& session, const std::string& url)
{
    Json body = {{"url", url}};
    call(session.endpoint, "POST", session_path(session) + "/url", &body, Op::Navigate);
}

Json execute_script(const Session& session, const std::string& script, const Json& args)
{
    Json body = {{"script", script}, {"args", args.is_array() ? args : Json::array()}};
    return call(session.endpoint, "POST", session_path(session) + "/execute/sync", &body, Op::Other);
}

void perform_actions(const Session& session, const ActionSequence& seq)
{
    Json body = encode_actions(seq);
    if (seq.empty())
        return;
    call(session.endpoint, "POST", session_path(session) + "/actions", &body, Op::Other);
}

void release_actions(const Session& session)
{
    call(session.endpoint, "DELETE", session_path(session) + "/actions", nullptr, Op::Other);
}

std::vector<std::uint8_t> take_screenshot(const Session& session)
{
    Json value = call(session.endpoint, "GET", session_path(session) + "/screenshot", nullptr, Op::Other);
    if (!value.is_string())
        throw Error(Errc::DecodeError, "screenshot value is not a base64 string");
    auto bytes = base64_decode(value.get<std::string>());
    if (!png_info(bytes))
        throw Error(Errc::DecodeError, "screenshot payload is not a PNG image");
    return bytes;
}

ScopedSession::~ScopedSession()
{
    try {
        delete_session(session_);
    } catch (...) {
    }
}

} // namespace vizgrade
