#include "vizgrade/webdriver.hpp"

#include <map>
#include <set>

namespace vizgrade {

namespace {

[[noreturn]] void invalid(const std::string& why)
{
    throw Error(Errc::InvalidSequence, why);
}

/// Exactly one well-formed UTF-8 code point.
bool single_code_point(const std::string& s)
{
    if (s.empty())
        return false;
    const auto lead = static_cast<unsigned char>(s[0]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || s.size() != len)
        return false;
    for (std::size_t i = 1; i < len; ++i)
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80)
            return false;
    return true;
}

std::string_view kind_name(SourceKind kind)
{
    switch (kind) {
    case SourceKind::Pointer: return "pointer";
    case SourceKind::Key: return "key";
    case SourceKind::None: return "none";
    }
    return "none";
}

bool allowed(SourceKind kind, const InputAction& action)
{
    if (std::holds_alternative<Pause>(action))
        return true;
    switch (kind) {
    case SourceKind::Pointer:
        return std::holds_alternative<PointerMove>(action) || std::holds_alternative<PointerDown>(action)
            || std::holds_alternative<PointerUp>(action);
    case SourceKind::Key:
        return std::holds_alternative<KeyDown>(action) || std::holds_alternative<KeyUp>(action);
    case SourceKind::None:
        return false;
    }
    return false;
}

Json encode_action(const InputAction& action)
{
    return std::visit(
        [](const auto& a) -> Json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, PointerMove>)
                return {{"type", "pointerMove"}, {"x", a.x}, {"y", a.y}, {"origin", a.origin}, {"duration", a.duration}};
            else if constexpr (std::is_same_v<T, PointerDown>)
                return {{"type", "pointerDown"}, {"button", a.button}};
            else if constexpr (std::is_same_v<T, PointerUp>)
                return {{"type", "pointerUp"}, {"button", a.button}};
            else if constexpr (std::is_same_v<T, KeyDown>)
                return {{"type", "keyDown"}, {"value", a.value}};
            else if constexpr (std::is_same_v<T, KeyUp>)
                return {{"type", "keyUp"}, {"value", a.value}};
            else
                return {{"type", "pause"}, {"duration", a.duration}};
        },
        action);
}

template <typename T>
T field(const Json& obj, const char* name)
{
    auto it = obj.find(name);
    if (it == obj.end())
        invalid(std::string("action is missing '") + name + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid(std::string("action field '") + name + "' has the wrong type");
    }
}

template <typename T>
T field_or(const Json& obj, const char* name, T fallback)
{
    return obj.contains(name) ? field<T>(obj, name) : fallback;
}

InputAction decode_action(const Json& obj)
{
    if (!obj.is_object())
        invalid("action is not an object");
    auto type = field<std::string>(obj, "type");
    if (type == "pointerMove")
        return PointerMove{field<int>(obj, "x"), field<int>(obj, "y"), field_or<std::string>(obj, "origin", "viewport"),
            field_or<int>(obj, "duration", 0)};
    if (type == "pointerDown")
        return PointerDown{field_or<int>(obj, "button", 0)};
    if (type == "pointerUp")
        return PointerUp{field_or<int>(obj, "button", 0)};
    if (type == "keyDown")
        return KeyDown{field<std::string>(obj, "value")};
    if (type == "keyUp")
        return KeyUp{field<std::string>(obj, "value")};
    if (type == "pause")
        return Pause{field_or<int>(obj, "duration", 0)};
    invalid("unknown action type '" + type + "'");
}

} // namespace

bool ActionSequence::empty() const
{
    for (const auto& source : sources)
        if (!source.actions.empty())
            return false;
    return true;
}

void validate(const ActionSequence& seq)
{
    std::set<std::string> ids;
    for (const auto& source : seq.sources) {
        if (source.id.empty())
            invalid("input source id is empty");
        if (!ids.insert(source.id).second)
            invalid("duplicate input source id '" + source.id + "'");

        std::map<int, int> pressed; // button -> outstanding downs
        for (const auto& action : source.actions) {
            if (!allowed(source.kind, action))
                invalid("action not permitted in a " + std::string(kind_name(source.kind)) + " source '" + source.id + "'");
            if (auto move = std::get_if<PointerMove>(&action); move && move->duration < 0)
                invalid("negative pointerMove duration in '" + source.id + "'");
            if (auto pause = std::get_if<Pause>(&action); pause && pause->duration < 0)
                invalid("negative pause duration in '" + source.id + "'");
            if (auto key = std::get_if<KeyDown>(&action); key && !single_code_point(key->value))
                invalid("keyDown value in '" + source.id + "' is not a single character");
            if (auto key = std::get_if<KeyUp>(&action); key && !single_code_point(key->value))
                invalid("keyUp value in '" + source.id + "' is not a single character");
            if (auto down = std::get_if<PointerDown>(&action))
                ++pressed[down->button];
            if (auto up = std::get_if<PointerUp>(&action)) {
                auto it = pressed.find(up->button);
                if (it != pressed.end() && it->second > 0)
                    --it->second;
            }
        }
        for (const auto& [button, count] : pressed)
            if (count > 0)
                invalid("pointerDown(button " + std::to_string(button) + ") without a later pointerUp in '" + source.id + "'");
    }
}

Json encode_actions(const ActionSequence& seq)
{
    validate(seq);
    Json sources = Json::array();
    for (const auto& source : seq.sources) {
        Json entry = {{"type", kind_name(source.kind)}, {"id", source.id}, {"actions", Json::array()}};
        if (source.kind == SourceKind::Pointer)
            entry["parameters"] = {{"pointerType", "mouse"}};
        for (const auto& action : source.actions)
            entry["actions"].push_back(encode_action(action));
        sources.push_back(std::move(entry));
    }
    return {{"actions", std::move(sources)}};
}

ActionSequence decode_actions(const Json& payload)
{
    if (!payload.is_object() || !payload.contains("actions") || !payload["actions"].is_array())
        invalid("payload has no 'actions' array");
    ActionSequence seq;
    for (const auto& entry : payload["actions"]) {
        if (!entry.is_object())
            invalid("input source is not an object");
        InputSource source;
        auto type = field<std::string>(entry, "type");
        if (type == "pointer")
            source.kind = SourceKind::Pointer;
        else if (type == "key")
            source.kind = SourceKind::Key;
        else if (type == "none")
            source.kind = SourceKind::None;
        else
            invalid("unknown input source type '" + type + "'");
        source.id = field<std::string>(entry, "id");
        auto actions = entry.find("actions");
        if (actions == entry.end() || !actions->is_array())
            invalid("input source '" + source.id + "' has no actions array");
        for (const auto& action : *actions)
            source.actions.push_back(decode_action(action));
        seq.sources.push_back(std::move(source));
    }
    validate(seq);
    return seq;
}

} // namespace vizgrade
