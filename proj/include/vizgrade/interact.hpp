#pragma once

#include "vizgrade/expression.hpp"
#include "vizgrade/scene.hpp"
#include "vizgrade/webdriver.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vizgrade {

/// Outcome of one rubric check.
struct CheckResult {
    std::string id;
    bool passed = false;
    double points_awarded = 0;
    double max_points = 0;
    std::string observed;
    std::string expected;
    std::string feedback;
};

// ─── Gestures ───────────────────────────────────────────────────────────────

enum class GestureKind { Hover, Click, DragDrop, TypeText, KeyPress };

std::string_view to_string(GestureKind kind);

struct ElementTarget {
    std::string selector;
    std::size_t index = 0; // which match, in document order
};

using GestureTarget = std::variant<ElementTarget, Point>;

struct Gesture {
    GestureKind kind = GestureKind::Hover;
    std::optional<GestureTarget> target;
    std::optional<GestureTarget> secondary_target; // drag_drop destination
    std::string text;                              // type_text, key_press
    int dwell_ms = 100;                            // hover
    int drag_duration_ms = 250;                    // drag_drop

    void validate() const;
};

/// Turns a gesture into low-level input actions, resolving selector targets
/// to the center of their absolute geometry.
ActionSequence compile_gesture(const Gesture& gesture, const RenderedScene& scene);

// ─── Scene diff ─────────────────────────────────────────────────────────────

struct AttrChange {
    std::string key; // structural key of the element
    std::string attr;
    std::optional<std::string> before;
    std::optional<std::string> after;
};

/// Elements are matched across scenes by their structural key: the chain of
/// tag#id.class segments from the root, with an occurrence index among
/// same-keyed siblings. "Present" means the element exists and is visible.
struct SceneDiff {
    std::vector<std::string> appeared;
    std::vector<std::string> disappeared;
    std::vector<AttrChange> changed;

    bool empty() const { return appeared.empty() && disappeared.empty() && changed.empty(); }
    std::string summary() const;
};

std::vector<std::string> structural_keys(const RenderedScene& scene);
SceneDiff diff_scenes(const RenderedScene& before, const RenderedScene& after);

// ─── Interaction specs ──────────────────────────────────────────────────────

struct ElementAppears {
    std::string selector;
};
struct ElementDisappears {
    std::string selector;
};
/// Exactly one of pattern (regex search) or expr (expression, exact match).
struct TextMatches {
    std::string selector;
    std::optional<std::string> pattern;
    std::optional<std::string> expr;
};
struct AttrChanged {
    std::string selector;
    std::string attr;
};

using Expectation = std::variant<ElementAppears, ElementDisappears, TextMatches, AttrChanged>;

struct InteractionSpec {
    std::string id;
    std::vector<Gesture> gestures;
    std::vector<Expectation> expect;
    int settle_ms = 300;

    void validate() const;
};

InteractionSpec interaction_from_json(const Json& doc);

// ─── Players ────────────────────────────────────────────────────────────────

class ScenePlayer {
public:
    virtual ~ScenePlayer() = default;
    virtual RenderedScene capture() = 0;
    virtual void act(const ActionSequence& seq) = 0;
    virtual void settle(int ms) = 0;
};

/// Replays a recorded sequence of scenes: capture() returns the current frame,
/// every act() advances one frame (staying on the last one).
class ScriptedPlayer : public ScenePlayer {
public:
    explicit ScriptedPlayer(std::vector<RenderedScene> frames);

    RenderedScene capture() override;
    void act(const ActionSequence& seq) override;
    void settle(int) override { }

    const std::vector<ActionSequence>& performed() const { return performed_; }
    const std::vector<RenderedScene>& frames() const { return frames_; }

private:
    const std::vector<RenderedScene> frames_;
    std::size_t cursor_ = 0;
    std::vector<ActionSequence> performed_;
};

/// Drives a browser session; capture() runs the probe script, which must
/// return a snapshot document for the subtree under `root_selector`.
class LivePlayer : public ScenePlayer {
public:
    LivePlayer(const Session& session, std::string probe_script, std::string root_selector = "body");

    RenderedScene capture() override;
    void act(const ActionSequence& seq) override;
    void settle(int ms) override;

private:
    const Session& session_;
    std::string probe_;
    std::string root_;
};

/// Runs the gestures against the player and evaluates the expectations on the
/// post-interaction scene. Never throws: problems become a failed result whose
/// feedback includes the diff summary. `id`/points are left for the caller.
CheckResult grade_interaction(const InteractionSpec& spec, ScenePlayer& player, const Environment& env);

} // namespace vizgrade
