#pragma once

#include "json.hpp"
#include "vizgrade/error.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vizgrade {

using Json = nlohmann::json;

// ─── Input actions (W3C WebDriver "Perform Actions" payload) ────────────────

enum class SourceKind { Pointer, Key, None };

struct PointerMove {
    int x = 0;
    int y = 0;
    std::string origin = "viewport";
    int duration = 0; // ms
    friend bool operator==(const PointerMove&, const PointerMove&) = default;
};

struct PointerDown {
    int button = 0;
    friend bool operator==(const PointerDown&, const PointerDown&) = default;
};

struct PointerUp {
    int button = 0;
    friend bool operator==(const PointerUp&, const PointerUp&) = default;
};

struct KeyDown {
    std::string value; // one code point, UTF-8
    friend bool operator==(const KeyDown&, const KeyDown&) = default;
};

struct KeyUp {
    std::string value;
    friend bool operator==(const KeyUp&, const KeyUp&) = default;
};

struct Pause {
    int duration = 0; // ms
    friend bool operator==(const Pause&, const Pause&) = default;
};

using InputAction = std::variant<PointerMove, PointerDown, PointerUp, KeyDown, KeyUp, Pause>;

struct InputSource {
    std::string id;
    SourceKind kind = SourceKind::None;
    std::vector<InputAction> actions;
    friend bool operator==(const InputSource&, const InputSource&) = default;
};

struct ActionSequence {
    std::vector<InputSource> sources;

    bool empty() const;
    friend bool operator==(const ActionSequence&, const ActionSequence&) = default;
};

/// Throws InvalidSequence when ids repeat, a duration is negative, an action
/// does not belong to its source kind, or a pointerDown lacks a later
/// pointerUp for the same button.
void validate(const ActionSequence& seq);

Json encode_actions(const ActionSequence& seq);
ActionSequence decode_actions(const Json& payload);

// ─── Endpoint and session ───────────────────────────────────────────────────

struct DriverEndpoint {
    std::string base_url;
    int connect_timeout_ms = 5000;
    int request_timeout_ms = 30000;

    /// Uses VIZGRADE_WEBDRIVER_URL when set, else `fallback`.
    static DriverEndpoint from_env(const std::string& fallback = "http://127.0.0.1:4444");
    void validate() const;
};

struct Capabilities {
    std::string browser_name = "chrome";
    bool headless = true;
    int viewport_width = 1280;
    int viewport_height = 800;
    Json extra = Json::object(); // merged into alwaysMatch

    Json to_w3c() const;
};

/// A live browser session. Single-owner: never call into one session from
/// two threads at once.
struct Session {
    std::string session_id;
    DriverEndpoint endpoint;
    Capabilities capabilities;
};

Session new_session(const DriverEndpoint& endpoint, const Capabilities& capabilities);
void delete_session(const Session& session);
void navigate(const Session& session, const std::string& url);
Json execute_script(const Session& session, const std::string& script, const Json& args = Json::array());
void perform_actions(const Session& session, const ActionSequence& seq);
void release_actions(const Session& session);
std::vector<std::uint8_t> take_screenshot(const Session& session);

/// Deletes the session on scope exit; errors during teardown are swallowed.
class ScopedSession {
public:
    explicit ScopedSession(Session session)
        : session_(std::move(session))
    {
    }
    ~ScopedSession();
    ScopedSession(const ScopedSession&) = delete;
    ScopedSession& operator=(const ScopedSession&) = delete;

    const Session& get() const { return session_; }

private:
    Session session_;
};

// ─── base64 ─────────────────────────────────────────────────────────────────

std::string base64_encode(std::string_view bytes);
/// Strict decoder (whitespace tolerated); throws DecodeError.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// PNG header check plus IHDR width/height, when the data is a PNG.
struct PngInfo {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};
std::optional<PngInfo> png_info(const std::vector<std::uint8_t>& bytes);

} // namespace vizgrade
