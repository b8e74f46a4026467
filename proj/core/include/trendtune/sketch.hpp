#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trendtune/indicators.hpp"

namespace trendtune {

// The five market trends a sketch can label.
enum class TrendLabel {
    steady_descend,
    steady_ascend,
    rapid_descend,
    rapid_ascend,
    oscillation,
};

inline constexpr int kTrendCount = 5;

std::string_view to_string(TrendLabel t);
std::optional<TrendLabel> trend_from_string(std::string_view name);

enum class SketchIndicator { vol, dr, gr };
enum class SketchComparator { less, greater };

std::string_view to_string(SketchIndicator i);
std::string_view to_string(SketchComparator c);

// One boolean clause of a conditional: indicator OP thresholds[hole].
// Comparators are strict; equality falls through to later conditionals.
struct SketchClause {
    SketchIndicator indicator = SketchIndicator::vol;
    SketchComparator comparator = SketchComparator::less;
    int hole = 0;  // threshold hole index
};

// One conditional statement. The oscillation default has no clauses and
// must come last; every other trend requires at least one clause. All
// clauses of a conditional must hold (conjunction).
struct SketchConditional {
    TrendLabel trend = TrendLabel::oscillation;
    std::vector<SketchClause> clauses;
    int directive_hole = 0;  // index into SketchParams::directives
};

// Whether directives are softmax temperatures for one frozen policy or
// mixture weights over an ensemble of k sub-policies.
struct SketchMode {
    enum class Kind { single, ensemble };
    Kind kind = Kind::single;
    int ensemble_size = 1;

    static SketchMode single_model() { return {Kind::single, 1}; }
    static SketchMode ensemble(int k);

    // Scalars per directive hole: 1 temperature or k weights.
    int directive_width() const { return kind == Kind::single ? 1 : ensemble_size; }
    bool operator==(const SketchMode&) const = default;
};

// An ordered list of conditionals with threshold and directive holes.
// Immutable once constructed; construction validates the structural
// invariants (each trend exactly once, oscillation last, dense holes).
class SketchTemplate {
public:
    SketchTemplate(std::vector<SketchConditional> conditionals, SketchMode mode);

    const std::vector<SketchConditional>& conditionals() const { return conditionals_; }
    const SketchMode& mode() const { return mode_; }

    int threshold_count() const { return threshold_count_; }
    int directive_count() const { return static_cast<int>(conditionals_.size()); }
    // Total scalar parameters: thresholds + directives × directive width.
    int scalar_count() const { return threshold_count_ + directive_count() * mode_.directive_width(); }

    // Same conditionals under a different mode.
    SketchTemplate with_mode(SketchMode mode) const { return {conditionals_, mode}; }

private:
    std::vector<SketchConditional> conditionals_;
    SketchMode mode_;
    int threshold_count_ = 0;
};

// The built-in five-trend template:
//   steady_descend <- (vol < ?0) & (dr > ?1)
//   rapid_descend  <- (vol > ?2) & (dr > ?3)
//   steady_ascend  <- (vol < ?4) & (gr > ?5)
//   rapid_ascend   <- (vol > ?6) & (gr > ?7)
//   else -> oscillation
// Descend conditionals precede ascend ones, so ambiguous feature points
// resolve conservatively.
SketchTemplate default_template(SketchMode mode = SketchMode::single_model());

// Parses the rule grammar: one rule per line,
//   trend <- (indicator OP ?) & (indicator OP ?) ...
// with a final `else -> oscillation`. `#` starts a comment. Threshold
// holes are numbered left to right in file order.
SketchTemplate parse_sketch(const std::string& text, SketchMode mode = SketchMode::single_model());

// Canonical rule-file rendering; parse_sketch(render_sketch(t)) is
// structurally identical to t.
std::string render_sketch(const SketchTemplate& tmpl);

// Filled holes for a template: thresholds[i] pairs with hole index i;
// directives[j] pairs with conditional j and holds 1 scalar (temperature)
// or k scalars (mixture weights).
struct SketchParams {
    std::vector<double> thresholds;
    std::vector<std::vector<double>> directives;
};

// Throws ValidationError when params do not fit the template: wrong hole
// counts, non-positive temperature, negative weights, or weights not
// summing to 1 within 1e-9.
void validate_params(const SketchTemplate& tmpl, const SketchParams& params);

// The tuning directive selected for one time step.
struct TuningDirective {
    TrendLabel trend = TrendLabel::oscillation;
    std::vector<double> payload;

    double temperature() const { return payload.at(0); }
    const std::vector<double>& weights() const { return payload; }
};

// Evaluates conditionals in listed order against the features; the first
// conditional whose clauses all hold wins, otherwise the oscillation
// default. Returns that trend and its directive payload.
TuningDirective interpret(const SketchTemplate& tmpl, const SketchParams& params,
                          const MarketFeatures& features);

// Parameter-file round trip. The format is a flat JSON object of named
// scalars: threshold_<hole> for thresholds, phi_<trend> for single-model
// directives, phi_<trend>_<i> for ensemble weights.
std::string params_to_json(const SketchTemplate& tmpl, const SketchParams& params);
SketchParams params_from_json(const SketchTemplate& tmpl, const std::string& text);
void write_params(const SketchTemplate& tmpl, const SketchParams& params, const std::string& path);
SketchParams read_params(const SketchTemplate& tmpl, const std::string& path);

}  // namespace trendtune
