#include "vizgrade/interact.hpp"

#include "vizgrade/format.hpp"
#include "vizgrade/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace vizgrade {

std::string_view to_string(GestureKind kind)
{
    switch (kind) {
    case GestureKind::Hover: return "hover";
    case GestureKind::Click: return "click";
    case GestureKind::DragDrop: return "drag_drop";
    case GestureKind::TypeText: return "type_text";
    case GestureKind::KeyPress: return "key_press";
    }
    return "unknown";
}

void Gesture::validate() const
{
    auto bad = [&](const std::string& why) { throw Error(Errc::SchemaError, std::string(to_string(kind)) + " gesture " + why); };
    switch (kind) {
    case GestureKind::Hover:
    case GestureKind::Click:
        if (!target)
            bad("needs a target");
        if (dwell_ms < 0)
            bad("has a negative dwell");
        break;
    case GestureKind::DragDrop:
        if (!target || !secondary_target)
            bad("needs a target and a secondary_target");
        if (drag_duration_ms <= 0)
            bad("needs a positive drag duration");
        break;
    case GestureKind::TypeText:
        if (text.empty())
            bad("needs text");
        break;
    case GestureKind::KeyPress:
        if (text.empty())
            bad("needs a key");
        break;
    }
}

// ─── Gesture compilation ────────────────────────────────────────────────────

namespace {

constexpr const char* kPointerId = "mouse";
constexpr const char* kKeyboardId = "keyboard";

struct ResolvedTarget {
    Point point;
    std::optional<ElementRef> element;
};

ResolvedTarget resolve_target(const GestureTarget& target, const RenderedScene& scene)
{
    if (auto point = std::get_if<Point>(&target))
        return {*point, std::nullopt};
    const auto& element = std::get<ElementTarget>(target);
    auto matches = query(scene, element.selector);
    if (element.index >= matches.size())
        throw Error(Errc::TargetNotFound, "'" + element.selector + "' has " + std::to_string(matches.size())
                + " match(es), wanted index " + std::to_string(element.index));
    auto ref = matches[element.index];
    return {absolute_geometry(scene, ref).center(), ref};
}

PointerMove move_to(Point p, int duration = 0)
{
    return PointerMove{static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)), "viewport", duration};
}

std::vector<std::string> code_points(const std::string& text)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size();) {
        auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 1;
        out.push_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::string key_value(const std::string& name)
{
    // WebDriver normalized key values (Private Use Area code points).
    static const std::map<std::string, std::string> named{
        {"Enter", "\xEE\x80\x87"},
        {"Escape", "\xEE\x80\x8C"},
        {"Tab", "\xEE\x80\x84"},
        {"Backspace", "\xEE\x80\x83"},
        {"ArrowLeft", "\xEE\x80\x92"},
        {"ArrowUp", "\xEE\x80\x93"},
        {"ArrowRight", "\xEE\x80\x94"},
        {"ArrowDown", "\xEE\x80\x95"},
        {"Space", " "},
    };
    if (auto it = named.find(name); it != named.end())
        return it->second;
    auto points = code_points(name);
    if (points.size() != 1)
        throw Error(Errc::SchemaError, "unknown key '" + name + "'");
    return points.front();
}

} // namespace

ActionSequence compile_gesture(const Gesture& gesture, const RenderedScene& scene)
{
    gesture.validate();
    InputSource pointer{kPointerId, SourceKind::Pointer, {}};
    InputSource keyboard{kKeyboardId, SourceKind::Key, {}};

    switch (gesture.kind) {
    case GestureKind::Hover: {
        auto target = resolve_target(*gesture.target, scene);
        pointer.actions = {move_to(target.point), Pause{gesture.dwell_ms}};
        break;
    }
    case GestureKind::Click: {
        auto target = resolve_target(*gesture.target, scene);
        pointer.actions = {move_to(target.point), PointerDown{0}, PointerUp{0}};
        break;
    }
    case GestureKind::DragDrop: {
        auto from = resolve_target(*gesture.target, scene);
        auto to = resolve_target(*gesture.secondary_target, scene);
        pointer.actions = {move_to(from.point), PointerDown{0}, move_to(to.point, gesture.drag_duration_ms), PointerUp{0}};
        break;
    }
    case GestureKind::TypeText:
    case GestureKind::KeyPress: {
        if (gesture.target) {
            // focus by clicking first; the keyboard idles through those ticks
            auto target = resolve_target(*gesture.target, scene);
            pointer.actions = {move_to(target.point), PointerDown{0}, PointerUp{0}};
            keyboard.actions = {Pause{0}, Pause{0}, Pause{0}};
        }
        std::vector<std::string> keys;
        if (gesture.kind == GestureKind::TypeText)
            keys = code_points(gesture.text);
        else
            keys = {key_value(gesture.text)};
        for (const auto& key : keys) {
            keyboard.actions.push_back(KeyDown{key});
            keyboard.actions.push_back(KeyUp{key});
        }
        break;
    }
    }

    ActionSequence seq;
    if (!pointer.actions.empty())
        seq.sources.push_back(std::move(pointer));
    if (!keyboard.actions.empty())
        seq.sources.push_back(std::move(keyboard));
    validate(seq);
    return seq;
}

// ─── Diff ───────────────────────────────────────────────────────────────────

std::string SceneDiff::summary() const
{
    if (empty())
        return "no visible change between the scenes before and after the interaction";
    std::ostringstream out;
    auto list = [&](const char* label, const std::vector<std::string>& keys) {
        out << label << " (" << keys.size() << ")";
        for (std::size_t i = 0; i < keys.size() && i < 5; ++i)
            out << (i ? ", " : ": ") << keys[i];
        if (keys.size() > 5)
            out << ", ...";
    };
    list("appeared", appeared);
    out << "; ";
    list("disappeared", disappeared);
    out << "; changed attributes (" << changed.size() << ")";
    return out.str();
}

std::vector<std::string> structural_keys(const RenderedScene& scene)
{
    std::vector<std::string> keys(scene.size());
    std::map<std::string, std::size_t> seen; // parent key + segment -> occurrences so far
    for (std::size_t i = 0; i < scene.size(); ++i) {
        ElementRef ref{i};
        const auto& el = scene.element(ref);
        std::string segment = el.tag;
        if (auto id = el.attrs.find("id"); id != el.attrs.end() && !id->second.empty()) {
            segment += "#" + id->second;
        } else {
            auto classes = class_list(el);
            if (!classes.empty())
                segment += "." + classes.front();
        }
        auto parent = scene.parent(ref);
        std::string prefix = parent ? keys[parent->index] : std::string();
        std::string base = prefix + "/" + segment;
        keys[i] = base + "[" + std::to_string(seen[base]++) + "]";
    }
    return keys;
}

SceneDiff diff_scenes(const RenderedScene& before, const RenderedScene& after)
{
    const auto before_keys = structural_keys(before);
    const auto after_keys = structural_keys(after);
    std::map<std::string, ElementRef> before_index;
    std::map<std::string, ElementRef> after_index;
    for (std::size_t i = 0; i < before.size(); ++i)
        before_index[before_keys[i]] = {i};
    for (std::size_t i = 0; i < after.size(); ++i)
        after_index[after_keys[i]] = {i};

    auto present = [](const RenderedScene& scene, const std::map<std::string, ElementRef>& index, const std::string& key) {
        auto it = index.find(key);
        return it != index.end() && is_visible(scene, it->second);
    };

    SceneDiff diff;
    for (std::size_t i = 0; i < after.size(); ++i)
        if (is_visible(after, {i}) && !present(before, before_index, after_keys[i]))
            diff.appeared.push_back(after_keys[i]);
    for (std::size_t i = 0; i < before.size(); ++i)
        if (is_visible(before, {i}) && !present(after, after_index, before_keys[i]))
            diff.disappeared.push_back(before_keys[i]);

    for (std::size_t i = 0; i < after.size(); ++i) {
        auto it = before_index.find(after_keys[i]);
        if (it == before_index.end())
            continue;
        const auto& old_el = before.element(it->second);
        const auto& new_el = after.element({i});
        auto compare = [&](const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b,
                           const std::string& prefix) {
            std::set<std::string> names;
            for (const auto& [k, v] : a)
                names.insert(k);
            for (const auto& [k, v] : b)
                names.insert(k);
            for (const auto& name : names) {
                auto x = a.find(name);
                auto y = b.find(name);
                std::optional<std::string> ov = x == a.end() ? std::nullopt : std::optional<std::string>(x->second);
                std::optional<std::string> nv = y == b.end() ? std::nullopt : std::optional<std::string>(y->second);
                if (ov != nv)
                    diff.changed.push_back({after_keys[i], prefix + name, ov, nv});
            }
        };
        compare(old_el.attrs, new_el.attrs, "");
        compare(old_el.computed_style, new_el.computed_style, "style:");
        if (old_el.text != new_el.text)
            diff.changed.push_back({after_keys[i], "#text", old_el.text, new_el.text});
    }
    return diff;
}

// ─── Spec parsing ───────────────────────────────────────────────────────────

namespace {

GestureTarget target_from_json(const Json& value)
{
    if (value.is_string())
        return ElementTarget{value.get<std::string>(), 0};
    if (value.is_object() && value.contains("selector"))
        return ElementTarget{value.at("selector").get<std::string>(), value.value("index", std::size_t{0})};
    if (value.is_object() && value.contains("x") && value.contains("y"))
        return Point{value.at("x").get<double>(), value.at("y").get<double>()};
    throw Error(Errc::SchemaError, "gesture target must be a selector string, {selector, index} or {x, y}");
}

Gesture gesture_from_json(const Json& doc)
{
    static const std::map<std::string, GestureKind> kinds{
        {"hover", GestureKind::Hover},
        {"click", GestureKind::Click},
        {"drag_drop", GestureKind::DragDrop},
        {"type_text", GestureKind::TypeText},
        {"key_press", GestureKind::KeyPress},
    };
    Gesture g;
    auto kind = kinds.find(doc.at("kind").get<std::string>());
    if (kind == kinds.end())
        throw Error(Errc::SchemaError, "unknown gesture kind '" + doc.at("kind").get<std::string>() + "'");
    g.kind = kind->second;
    if (doc.contains("target")) {
        g.target = target_from_json(doc["target"]);
        if (auto* element = std::get_if<ElementTarget>(&*g.target); element && doc.contains("index"))
            element->index = doc["index"].get<std::size_t>();
    }
    if (doc.contains("secondary_target"))
        g.secondary_target = target_from_json(doc["secondary_target"]);
    if (doc.contains("text"))
        g.text = doc["text"].get<std::string>();
    if (doc.contains("key"))
        g.text = doc["key"].get<std::string>();
    g.dwell_ms = doc.value("dwell", g.dwell_ms);
    g.drag_duration_ms = doc.value("duration", g.drag_duration_ms);
    g.validate();
    return g;
}

Expectation expectation_from_json(const Json& doc)
{
    const auto type = doc.at("type").get<std::string>();
    const auto selector = doc.at("selector").get<std::string>();
    parse_selector(selector);
    if (type == "element_appears")
        return ElementAppears{selector};
    if (type == "element_disappears")
        return ElementDisappears{selector};
    if (type == "attr_changed")
        return AttrChanged{selector, doc.at("attr").get<std::string>()};
    if (type == "text_matches") {
        TextMatches t{selector, std::nullopt, std::nullopt};
        if (doc.contains("pattern"))
            t.pattern = doc["pattern"].get<std::string>();
        if (doc.contains("expr"))
            t.expr = doc["expr"].get<std::string>();
        if (t.pattern.has_value() == t.expr.has_value())
            throw Error(Errc::SchemaError, "text_matches needs exactly one of 'pattern' or 'expr'");
        if (t.expr)
            Expression::parse(*t.expr);
        if (t.pattern) {
            try {
                std::regex check(*t.pattern);
            } catch (const std::regex_error& e) {
                throw Error(Errc::SchemaError, "bad pattern '" + *t.pattern + "': " + e.what());
            }
        }
        return t;
    }
    throw Error(Errc::SchemaError, "unknown expectation type '" + type + "'");
}

} // namespace

void InteractionSpec::validate() const
{
    if (id.empty())
        throw Error(Errc::SchemaError, "interaction without id");
    if (gestures.empty() || expect.empty())
        throw Error(Errc::SchemaError, "interaction '" + id + "' needs at least one gesture and one expectation");
    if (settle_ms < 0)
        throw Error(Errc::SchemaError, "interaction '" + id + "' has a negative settle time");
    for (const auto& g : gestures)
        g.validate();
}

InteractionSpec interaction_from_json(const Json& doc)
{
    InteractionSpec spec;
    try {
        spec.id = doc.at("id").get<std::string>();
        for (const auto& g : doc.at("gestures"))
            spec.gestures.push_back(gesture_from_json(g));
        for (const auto& e : doc.at("expect"))
            spec.expect.push_back(expectation_from_json(e));
        spec.settle_ms = doc.value("settle", spec.settle_ms);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaError, std::string("interaction: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::SchemaError)
            throw;
        throw Error(Errc::SchemaError, "interaction '" + spec.id + "': " + e.what());
    }
    spec.validate();
    return spec;
}

// ─── Players ────────────────────────────────────────────────────────────────

ScriptedPlayer::ScriptedPlayer(std::vector<RenderedScene> frames)
    : frames_(std::move(frames))
{
    if (frames_.empty())
        throw Error(Errc::SchemaError, "a scripted player needs at least one recorded scene");
}

RenderedScene ScriptedPlayer::capture()
{
    return frames_[cursor_];
}

void ScriptedPlayer::act(const ActionSequence& seq)
{
    validate(seq);
    performed_.push_back(seq);
    if (cursor_ + 1 < frames_.size())
        ++cursor_;
}

LivePlayer::LivePlayer(const Session& session, std::string probe_script, std::string root_selector)
    : session_(session)
    , probe_(std::move(probe_script))
    , root_(std::move(root_selector))
{
}

RenderedScene LivePlayer::capture()
{
    Json doc = execute_script(session_, probe_, Json::array({root_}));
    if (doc.is_object() && doc.contains("error"))
        throw Error(Errc::SchemaError, "probe failed: " + doc["error"].dump());
    return scene_from_json(doc);
}

void LivePlayer::act(const ActionSequence& seq)
{
    perform_actions(session_, seq);
}

void LivePlayer::settle(int ms)
{
    sleep_ms(ms);
}

// ─── Grading ────────────────────────────────────────────────────────────────

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string describe(const Expectation& e)
{
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ElementAppears>)
                return "'" + x.selector + "' appears";
            else if constexpr (std::is_same_v<T, ElementDisappears>)
                return "'" + x.selector + "' disappears";
            else if constexpr (std::is_same_v<T, AttrChanged>)
                return "'" + x.attr + "' of '" + x.selector + "' changes";
            else
                return "text of '" + x.selector + "' matches " + (x.pattern ? "/" + *x.pattern + "/" : "{" + *x.expr + "}");
        },
        e);
}

struct Verdict {
    bool ok = false;
    std::string detail;
};

Verdict evaluate(const Expectation& expectation, const RenderedScene& pre, const RenderedScene& post, const SceneDiff& diff,
    const Environment& env)
{
    const auto post_keys = structural_keys(post);
    const auto pre_keys = structural_keys(pre);
    auto contains = [](const std::vector<std::string>& list, const std::string& key) {
        return std::find(list.begin(), list.end(), key) != list.end();
    };

    if (auto e = std::get_if<ElementAppears>(&expectation)) {
        for (auto ref : query(post, e->selector))
            if (contains(diff.appeared, post_keys[ref.index]))
                return {true, ""};
        return {false, "'" + e->selector + "' did not appear"};
    }
    if (auto e = std::get_if<ElementDisappears>(&expectation)) {
        for (auto ref : query(pre, e->selector))
            if (contains(diff.disappeared, pre_keys[ref.index]))
                return {true, ""};
        return {false, "'" + e->selector + "' did not disappear"};
    }
    if (auto e = std::get_if<AttrChanged>(&expectation)) {
        for (auto ref : query(post, e->selector))
            for (const auto& change : diff.changed)
                if (change.key == post_keys[ref.index] && change.attr == e->attr)
                    return {true, ""};
        return {false, "'" + e->attr + "' of '" + e->selector + "' did not change"};
    }

    const auto& t = std::get<TextMatches>(expectation);
    std::string wanted;
    if (t.expr)
        wanted = to_string(eval_expression(*t.expr, env));
    std::vector<std::string> seen;
    for (auto ref : query(post, t.selector)) {
        if (!is_visible(post, ref))
            continue;
        std::string text = trim(post.text_content(ref));
        bool ok = t.pattern ? std::regex_search(text, std::regex(*t.pattern)) : text == trim(wanted);
        if (ok)
            return {true, ""};
        seen.push_back("\"" + text + "\"");
    }
    std::string detail = "text of '" + t.selector + "' ";
    detail += t.pattern ? "does not match /" + *t.pattern + "/" : "is not \"" + wanted + "\"";
    if (seen.empty())
        detail += " (no visible match)";
    else
        detail += " (saw " + seen.front() + ")";
    return {false, detail};
}

} // namespace

CheckResult grade_interaction(const InteractionSpec& spec, ScenePlayer& player, const Environment& env)
{
    CheckResult result;
    result.id = spec.id;
    std::vector<std::string> wanted;
    for (const auto& e : spec.expect)
        wanted.push_back(describe(e));
    for (std::size_t i = 0; i < wanted.size(); ++i)
        result.expected += (i ? "; " : "") + wanted[i];

    std::optional<SceneDiff> diff;
    try {
        const RenderedScene pre = player.capture();
        RenderedScene current = pre;
        Environment local = env;
        for (const auto& gesture : spec.gestures) {
            auto seq = compile_gesture(gesture, current);
            if (gesture.target && (gesture.kind == GestureKind::Hover || gesture.kind == GestureKind::Click)) {
                if (auto element = std::get_if<ElementTarget>(&*gesture.target)) {
                    auto ref = query(current, element->selector).at(element->index);
                    if (const auto& datum = current.element(ref).datum)
                        local.objects["datum"] = *datum;
                }
            }
            player.act(seq);
            current = player.capture();
        }
        player.settle(spec.settle_ms);
        const RenderedScene post = player.capture();
        diff = diff_scenes(pre, post);

        std::vector<std::string> failures;
        for (const auto& e : spec.expect) {
            Verdict v;
            try {
                v = evaluate(e, pre, post, *diff, local);
            } catch (const Error& err) {
                v = {false, describe(e) + ": " + err.what()};
            }
            if (!v.ok)
                failures.push_back(v.detail);
        }
        result.observed = diff->summary();
        result.passed = failures.empty();
        if (result.passed) {
            result.feedback = "interaction '" + spec.id + "' behaved as expected";
        } else {
            result.feedback = "interaction '" + spec.id + "' failed: ";
            for (std::size_t i = 0; i < failures.size(); ++i)
                result.feedback += (i ? "; " : "") + failures[i];
            result.feedback += " [" + diff->summary() + "]";
        }
    } catch (const std::exception& err) {
        result.passed = false;
        result.observed = diff ? diff->summary() : "interaction did not complete";
        result.feedback = "interaction '" + spec.id + "' could not be performed: " + err.what();
    }
    return result;
}

} // namespace vizgrade
