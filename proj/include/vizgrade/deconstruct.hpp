#pragma once

#include "vizgrade/scene.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vizgrade {

using ChannelValue = std::variant<double, Color, std::string>;

std::string to_string(const ChannelValue& value);

struct Mark {
    ElementRef element;
    std::optional<Box> geometry;
    std::map<std::string, ChannelValue> channels;
    std::optional<Json> datum;

    std::optional<double> number(const std::string& channel) const;
};

struct MarkGroup {
    std::string anchor;
    std::vector<Mark> marks;
    std::string mark_tag;
};

/// Builds one Mark per element matching `anchor`, in document order.
/// Throws AnchorNotFound when nothing matches.
MarkGroup extract_group(const RenderedScene& scene, const std::string& anchor);

// ─── Data binding ───────────────────────────────────────────────────────────

struct CompletenessReport {
    std::size_t expected = 0;
    std::size_t plotted = 0;
    std::vector<Json> missing;             // unmatched data rows
    std::vector<std::string> missing_keys; // their key values (or row dumps when positional)
    std::vector<std::size_t> extra;        // indices into MarkGroup::marks
};

struct MatchedPair {
    std::size_t mark = 0; // index into MarkGroup::marks
    std::size_t row = 0;  // index into the dataset
};

struct BindResult {
    std::vector<MatchedPair> pairs;
    CompletenessReport report;
};

/// Matches marks to dataset rows. With a key, marks whose bound datum carries
/// the key field are matched by key; all remaining marks are matched to the
/// remaining rows by position (left-to-right, then top-to-bottom). Without a
/// key every mark is matched positionally.
BindResult bind_data(const MarkGroup& group, const std::vector<Json>& dataset, const std::optional<std::string>& key);

struct CompletenessVerdict {
    bool passed = false;
    std::string message;
};

CompletenessVerdict check_completeness(const CompletenessReport& report, const std::vector<std::string>& allow_missing = {});

// ─── Scale inference ────────────────────────────────────────────────────────

enum class ScaleKind { Linear, Log, Ordinal, Band };

std::string_view to_string(ScaleKind kind);
std::optional<ScaleKind> parse_scale_kind(std::string_view text);

struct LinearParams {
    double slope = 0;
    double intercept = 0;
};

/// channel = slope * log_base(field) + intercept
struct LogParams {
    double base = 10;
    double slope = 0;
    double intercept = 0;
};

struct OrdinalParams {
    std::map<std::string, ChannelValue> table; // canonical field key -> channel value
};

/// Band i (in position order) starts at origin + i * step and is bandwidth wide.
struct BandParams {
    double step = 0;
    double bandwidth = 0;
    double origin = 0;
    std::vector<std::string> domain; // canonical field keys in position order
};

struct ScaleModel {
    std::string field;
    std::string channel;
    std::variant<LinearParams, LogParams, OrdinalParams, BandParams> params;
    double residual = 0; // normalized RMSE, fraction of the channel range

    ScaleKind kind() const { return static_cast<ScaleKind>(params.index()); }
};

struct ScalePair {
    Json field_value;
    ChannelValue channel_value;
    std::optional<double> extent; // mark size along the channel axis, for band detection
};

struct ScaleThresholds {
    double max_residual = 1e-3;
    double band_tolerance_px = 0.5;
};

/// Classifies the field->channel mapping: linear, then log, then (positional
/// channels) band, then ordinal. Throws InsufficientData or NoFit.
ScaleModel infer_scale(const std::vector<ScalePair>& pairs, const std::string& field, const std::string& channel,
    const ScaleThresholds& thresholds = {});

/// Collects (row[field], mark channel) pairs for every matched mark.
std::vector<ScalePair> scale_pairs(const MarkGroup& group, const BindResult& binding, const std::vector<Json>& dataset,
    const std::string& field, const std::string& channel);

bool is_positional_channel(std::string_view channel);

} // namespace vizgrade
