#include "trendtune/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

constexpr double kWeightSumTol = 1e-9;

const char* trend_names[kTrendCount] = {
    "steady_descend", "steady_ascend", "rapid_descend", "rapid_ascend", "oscillation"};

}  // namespace

std::string_view to_string(TrendLabel t) {
    return trend_names[static_cast<int>(t)];
}

std::optional<TrendLabel> trend_from_string(std::string_view name) {
    for (int i = 0; i < kTrendCount; ++i) {
        if (name == trend_names[i]) return static_cast<TrendLabel>(i);
    }
    return std::nullopt;
}

std::string_view to_string(SketchIndicator i) {
    switch (i) {
        case SketchIndicator::vol: return "vol";
        case SketchIndicator::dr: return "dr";
        case SketchIndicator::gr: return "gr";
    }
    return "?";
}

std::string_view to_string(SketchComparator c) {
    return c == SketchComparator::less ? "<" : ">";
}

SketchMode SketchMode::ensemble(int k) {
    if (k < 2) throw ConfigError("ensemble mode requires at least 2 sub-policies");
    return {Kind::ensemble, k};
}

SketchTemplate::SketchTemplate(std::vector<SketchConditional> conditionals, SketchMode mode)
    : conditionals_(std::move(conditionals)), mode_(mode) {
    if (mode_.kind == SketchMode::Kind::ensemble && mode_.ensemble_size < 2) {
        throw ConfigError("ensemble mode requires at least 2 sub-policies");
    }
    if (mode_.kind == SketchMode::Kind::single) mode_.ensemble_size = 1;

    bool seen[kTrendCount] = {};
    for (const SketchConditional& c : conditionals_) {
        const int idx = static_cast<int>(c.trend);
        if (seen[idx]) {
            throw ValidationError(std::string("trend '") + trend_names[idx] +
                                  "' appears more than once");
        }
        seen[idx] = true;
    }
    for (int i = 0; i < kTrendCount; ++i) {
        if (!seen[i]) {
            throw ValidationError(std::string("trend '") + trend_names[i] + "' is missing");
        }
    }
    if (conditionals_.empty() || conditionals_.back().trend != TrendLabel::oscillation) {
        throw ValidationError("the oscillation default must be the last conditional");
    }
    for (std::size_t i = 0; i < conditionals_.size(); ++i) {
        const SketchConditional& c = conditionals_[i];
        if (c.trend == TrendLabel::oscillation) {
            if (!c.clauses.empty()) {
                throw ValidationError("the oscillation default must not carry clauses");
            }
        } else if (c.clauses.empty()) {
            throw ValidationError(std::string("trend '") + std::string(to_string(c.trend)) +
                                  "' has no clauses");
        }
    }

    // Threshold holes must be dense 0..H-1, each used exactly once.
    std::vector<int> holes;
    for (const SketchConditional& c : conditionals_) {
        for (const SketchClause& cl : c.clauses) holes.push_back(cl.hole);
    }
    std::sort(holes.begin(), holes.end());
    for (std::size_t i = 0; i < holes.size(); ++i) {
        if (holes[i] != static_cast<int>(i)) {
            throw ValidationError("threshold hole indices must be dense 0..H-1");
        }
    }
    threshold_count_ = static_cast<int>(holes.size());

    // Directive holes must be a permutation of 0..c-1.
    std::vector<int> dirs;
    for (const SketchConditional& c : conditionals_) dirs.push_back(c.directive_hole);
    std::sort(dirs.begin(), dirs.end());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (dirs[i] != static_cast<int>(i)) {
            throw ValidationError("directive hole indices must be dense 0..c-1");
        }
    }
}

SketchTemplate default_template(SketchMode mode) {
    using I = SketchIndicator;
    using C = SketchComparator;
    std::vector<SketchConditional> conds;
    conds.push_back({TrendLabel::steady_descend, {{I::vol, C::less, 0}, {I::dr, C::greater, 1}}, 0});
    conds.push_back({TrendLabel::rapid_descend, {{I::vol, C::greater, 2}, {I::dr, C::greater, 3}}, 1});
    conds.push_back({TrendLabel::steady_ascend, {{I::vol, C::less, 4}, {I::gr, C::greater, 5}}, 2});
    conds.push_back({TrendLabel::rapid_ascend, {{I::vol, C::greater, 6}, {I::gr, C::greater, 7}}, 3});
    conds.push_back({TrendLabel::oscillation, {}, 4});
    return SketchTemplate(std::move(conds), mode);
}

namespace {

// Line-oriented recursive-descent parser for the rule grammar.
class RuleParser {
public:
    explicit RuleParser(const std::string& text) : text_(text) {}

    std::vector<SketchConditional> run() {
        std::istringstream in(text_);
        std::string line;
        bool saw_else = false;
        while (std::getline(in, line)) {
            ++line_no_;
            line_ = line;
            pos_ = 0;
            skip_space();
            if (done() || peek() == '#') continue;
            if (saw_else) fail("no rules may follow the else-branch");
            if (lookahead_word() == "else") {
                parse_else();
                saw_else = true;
            } else {
                parse_rule();
            }
        }
        if (!saw_else) {
            throw ParseError("missing oscillation default ('else -> oscillation')");
        }
        return std::move(conditionals_);
    }

private:
    void parse_rule() {
        const std::string name = read_word();
        const auto trend = trend_from_string(name);
        if (!trend) fail("unknown trend '" + name + "'");
        if (*trend == TrendLabel::oscillation) {
            fail("oscillation is the default branch; write 'else -> oscillation'");
        }
        for (const SketchConditional& c : conditionals_) {
            if (c.trend == *trend) fail("duplicate trend '" + name + "'");
        }
        expect("<-");
        SketchConditional cond;
        cond.trend = *trend;
        cond.clauses.push_back(parse_clause());
        skip_space();
        while (!done() && peek() == '&') {
            ++pos_;
            cond.clauses.push_back(parse_clause());
            skip_space();
        }
        if (!done()) fail("unexpected trailing text");
        cond.directive_hole = static_cast<int>(conditionals_.size());
        conditionals_.push_back(std::move(cond));
    }

    SketchClause parse_clause() {
        expect("(");
        const std::string name = read_word();
        SketchClause clause;
        if (name == "vol") clause.indicator = SketchIndicator::vol;
        else if (name == "dr") clause.indicator = SketchIndicator::dr;
        else if (name == "gr") clause.indicator = SketchIndicator::gr;
        else fail("unknown indicator '" + name + "'");
        skip_space();
        if (done() || (peek() != '<' && peek() != '>')) fail("expected comparator '<' or '>'");
        clause.comparator = peek() == '<' ? SketchComparator::less : SketchComparator::greater;
        ++pos_;
        expect("?");
        expect(")");
        clause.hole = next_hole_++;
        return clause;
    }

    void parse_else() {
        expect("else");
        expect("->");
        const std::string name = read_word();
        if (name != "oscillation") fail("the else-branch must name 'oscillation'");
        skip_space();
        if (!done()) fail("unexpected trailing text");
        SketchConditional cond;
        cond.trend = TrendLabel::oscillation;
        cond.directive_hole = static_cast<int>(conditionals_.size());
        conditionals_.push_back(std::move(cond));
    }

    bool done() const { return pos_ >= line_.size(); }
    char peek() const { return line_[pos_]; }
    void skip_space() {
        while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
    }
    std::string read_word() {
        skip_space();
        std::size_t start = pos_;
        while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        if (pos_ == start) fail("expected a name");
        return line_.substr(start, pos_ - start);
    }
    // Next word without consuming it.
    std::string lookahead_word() {
        std::size_t save = pos_;
        skip_space();
        std::size_t start = pos_;
        while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        std::string w = line_.substr(start, pos_ - start);
        pos_ = save;
        return w;
    }
    void expect(std::string_view token) {
        skip_space();
        if (line_.compare(pos_, token.size(), token) != 0) {
            fail("expected '" + std::string(token) + "'");
        }
        pos_ += token.size();
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("sketch rule error: " + msg + " at line " + std::to_string(line_no_) +
                         ", column " + std::to_string(pos_ + 1));
    }

    const std::string& text_;
    std::string line_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
    int next_hole_ = 0;
    std::vector<SketchConditional> conditionals_;
};

}  // namespace

SketchTemplate parse_sketch(const std::string& text, SketchMode mode) {
    RuleParser parser(text);
    return SketchTemplate(parser.run(), mode);
}

std::string render_sketch(const SketchTemplate& tmpl) {
    std::ostringstream out;
    for (const SketchConditional& c : tmpl.conditionals()) {
        if (c.trend == TrendLabel::oscillation) {
            out << "else -> oscillation\n";
            continue;
        }
        out << to_string(c.trend) << " <- ";
        for (std::size_t i = 0; i < c.clauses.size(); ++i) {
            if (i > 0) out << " & ";
            const SketchClause& cl = c.clauses[i];
            out << '(' << to_string(cl.indicator) << ' ' << to_string(cl.comparator) << " ?)";
        }
        out << '\n';
    }
    return out.str();
}

void validate_params(const SketchTemplate& tmpl, const SketchParams& params) {
    if (static_cast<int>(params.thresholds.size()) != tmpl.threshold_count()) {
        throw ValidationError("parameter mismatch: expected " +
                              std::to_string(tmpl.threshold_count()) + " thresholds, got " +
                              std::to_string(params.thresholds.size()));
    }
    if (static_cast<int>(params.directives.size()) != tmpl.directive_count()) {
        throw ValidationError("parameter mismatch: expected " +
                              std::to_string(tmpl.directive_count()) + " directives, got " +
                              std::to_string(params.directives.size()));
    }
    for (double v : params.thresholds) {
        if (!std::isfinite(v)) throw ValidationError("thresholds must be finite");
    }
    const int width = tmpl.mode().directive_width();
    for (const std::vector<double>& d : params.directives) {
        if (static_cast<int>(d.size()) != width) {
            throw ValidationError("directive width mismatch: expected " + std::to_string(width) +
                                  ", got " + std::to_string(d.size()));
        }
        if (tmpl.mode().kind == SketchMode::Kind::single) {
            if (!std::isfinite(d[0]) || d[0] <= 0.0) {
                throw ValidationError("temperature directives must be positive");
            }
        } else {
            double sum = 0.0;
            for (double w : d) {
                if (!std::isfinite(w) || w < 0.0) {
                    throw ValidationError("ensemble weights must be non-negative");
                }
                sum += w;
            }
            if (std::abs(sum - 1.0) > kWeightSumTol) {
                throw ValidationError("ensemble weights must sum to 1");
            }
        }
    }
}

TuningDirective interpret(const SketchTemplate& tmpl, const SketchParams& params,
                          const MarketFeatures& features) {
    validate_params(tmpl, params);
    auto value_of = [&](SketchIndicator ind) {
        switch (ind) {
            case SketchIndicator::vol: return features.vol;
            case SketchIndicator::dr: return features.dr;
            case SketchIndicator::gr: return features.gr;
        }
        return 0.0;
    };
    // The oscillation default has no clauses, so its conjunction is
    // vacuously true and it always matches when reached.
    for (const SketchConditional& c : tmpl.conditionals()) {
        bool hold = true;
        for (const SketchClause& cl : c.clauses) {
            const double v = value_of(cl.indicator);
            const double threshold = params.thresholds[cl.hole];
            const bool ok =
                cl.comparator == SketchComparator::less ? v < threshold : v > threshold;
            if (!ok) {
                hold = false;
                break;
            }
        }
        if (hold) return {c.trend, params.directives[c.directive_hole]};
    }
    throw EvalError("sketch interpretation fell through all conditionals");
}

namespace {

using ordered_json = nlohmann::ordered_json;

std::string directive_key(TrendLabel trend, int sub, bool ensemble) {
    std::string key = "phi_" + std::string(to_string(trend));
    if (ensemble) key += "_" + std::to_string(sub);
    return key;
}

}  // namespace

std::string params_to_json(const SketchTemplate& tmpl, const SketchParams& params) {
    validate_params(tmpl, params);
    ordered_json j;
    for (int i = 0; i < tmpl.threshold_count(); ++i) {
        j["threshold_" + std::to_string(i)] = params.thresholds[i];
    }
    const bool ensemble = tmpl.mode().kind == SketchMode::Kind::ensemble;
    for (const SketchConditional& c : tmpl.conditionals()) {
        const std::vector<double>& payload = params.directives[c.directive_hole];
        for (std::size_t s = 0; s < payload.size(); ++s) {
            j[directive_key(c.trend, static_cast<int>(s), ensemble)] = payload[s];
        }
    }
    return j.dump(2) + "\n";
}

SketchParams params_from_json(const SketchTemplate& tmpl, const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("parameter file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("parameter file must be a JSON object");

    SketchParams params;
    params.thresholds.resize(tmpl.threshold_count());
    params.directives.resize(tmpl.directive_count());

    std::size_t consumed = 0;
    auto fetch = [&](const std::string& key) {
        auto it = j.find(key);
        if (it == j.end()) throw ValidationError("parameter file missing '" + key + "'");
        if (!it->is_number()) throw ValidationError("parameter '" + key + "' must be a number");
        ++consumed;
        return it->get<double>();
    };

    for (int i = 0; i < tmpl.threshold_count(); ++i) {
        params.thresholds[i] = fetch("threshold_" + std::to_string(i));
    }
    const bool ensemble = tmpl.mode().kind == SketchMode::Kind::ensemble;
    const int width = tmpl.mode().directive_width();
    for (const SketchConditional& c : tmpl.conditionals()) {
        std::vector<double> payload(width);
        for (int s = 0; s < width; ++s) {
            payload[s] = fetch(directive_key(c.trend, s, ensemble));
        }
        params.directives[c.directive_hole] = std::move(payload);
    }
    if (consumed != j.size()) {
        throw ValidationError("parameter file contains unrecognized entries");
    }
    validate_params(tmpl, params);
    return params;
}

void write_params(const SketchTemplate& tmpl, const SketchParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write parameter file: " + path);
    out << params_to_json(tmpl, params);
    if (!out) throw ConfigError("failed writing parameter file: " + path);
}

SketchParams read_params(const SketchTemplate& tmpl, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open parameter file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return params_from_json(tmpl, buf.str());
}

}  // namespace trendtune
