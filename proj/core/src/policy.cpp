#include "trendtune/policy.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

std::string file_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

void validate_distribution(const ActionDistribution& dist, double tol) {
    if (dist.probs.size() < 2) {
        throw ValidationError("action distribution needs at least 2 actions");
    }
    double sum = 0.0;
    for (double p : dist.probs) {
        if (!std::isfinite(p) || p < 0.0) {
            throw ValidationError("action probabilities must be finite and non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw ValidationError("action probabilities must sum to 1");
    }
}

EnsemblePolicy::EnsemblePolicy(std::vector<std::shared_ptr<const FrozenPolicy>> subs)
    : subs_(std::move(subs)) {
    if (subs_.size() < 2) throw ConfigError("an ensemble needs at least 2 sub-policies");
    for (const auto& p : subs_) {
        if (!p) throw ConfigError("ensemble sub-policy is null");
        if (p->action_count() != subs_[0]->action_count()) {
            throw ConfigError("ensemble sub-policies must share one action-set size");
        }
    }
    std::string id;
    for (const auto& p : subs_) {
        if (!id.empty()) id += '+';
        id += p->id();
    }
    id_ = std::move(id);
}

ActionDistribution softmax(const PolicyLogits& logits) {
    return temperature_tune(logits, 1.0);
}

ActionDistribution temperature_tune(const PolicyLogits& logits, double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw DomainError("temperature must be a positive finite scalar");
    }
    if (logits.logits.empty()) throw DomainError("empty logit vector");
    double max_scaled = -std::numeric_limits<double>::infinity();
    for (double l : logits.logits) {
        if (!std::isfinite(l)) throw DomainError("logits must be finite");
        max_scaled = std::max(max_scaled, l / phi);
    }
    ActionDistribution dist;
    dist.probs.resize(logits.logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.logits.size(); ++i) {
        // Max-subtraction keeps exp() in range regardless of logit scale.
        const double e = std::exp(logits.logits[i] / phi - max_scaled);
        dist.probs[i] = e;
        total += e;
    }
    for (double& p : dist.probs) p /= total;
    return dist;
}

ActionDistribution ensemble_tune(const EnsemblePolicy& ensemble, std::span<const double> weights,
                                 const PolicyState& state) {
    if (static_cast<int>(weights.size()) != ensemble.size()) {
        throw ValidationError("weight count must match ensemble size");
    }
    double wsum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ValidationError("ensemble weights must be finite and non-negative");
        }
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-6) {
        throw ValidationError("ensemble weights must sum to 1 (got " + std::to_string(wsum) + ")");
    }
    ActionDistribution mix;
    mix.probs.assign(ensemble.action_count(), 0.0);
    for (int i = 0; i < ensemble.size(); ++i) {
        if (weights[i] == 0.0) continue;  // skip: keeps one-hot mixtures bit-exact
        const ActionDistribution d = softmax(ensemble.sub(i).logits(state));
        if (d.probs.size() != mix.probs.size()) {
            throw ValidationError("sub-policy logit width mismatch");
        }
        if (weights[i] == 1.0) return d;
        for (std::size_t a = 0; a < mix.probs.size(); ++a) mix.probs[a] += weights[i] * d.probs[a];
    }
    for (double& p : mix.probs) p /= wsum;
    return mix;
}

TablePolicy::TablePolicy(std::string id, int action_count)
    : id_(std::move(id)), action_count_(action_count) {
    if (action_count_ < 2) throw ConfigError("table policy needs at least 2 actions");
}

void TablePolicy::insert(const std::string& key, std::vector<double> logits) {
    if (static_cast<int>(logits.size()) != action_count_) {
        throw ValidationError("logit record width mismatch for state '" + key + "'");
    }
    table_[key] = std::move(logits);
}

PolicyLogits TablePolicy::logits(const PolicyState& state) const {
    auto it = table_.find(state.key);
    if (it == table_.end()) {
        throw EvalError("policy '" + id_ + "' has no logits for state '" + state.key + "'");
    }
    return {it->second};
}

void TablePolicy::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write logits file: " + path);
    char buf[64];
    for (const auto& [key, logits] : table_) {
        out << key;
        for (double l : logits) {
            std::snprintf(buf, sizeof(buf), ",%.17g", l);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw ConfigError("failed writing logits file: " + path);
}

std::shared_ptr<TablePolicy> TablePolicy::load(const std::string& path, std::string id) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open logits file: " + path);
    if (id.empty()) id = file_stem(path);

    std::shared_ptr<TablePolicy> policy;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        std::stringstream ss(line);
        std::string field;
        if (!std::getline(ss, field, ',')) {
            throw ParseError("missing state key in logits row " + std::to_string(row));
        }
        const std::string key = field;
        std::vector<double> logits;
        while (std::getline(ss, field, ',')) {
            errno = 0;
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (end != field.c_str() + field.size() || errno == ERANGE) {
                throw ParseError("cannot parse logit '" + field + "' in row " + std::to_string(row));
            }
            logits.push_back(v);
        }
        if (logits.size() < 2) {
            throw ParseError("logits row " + std::to_string(row) + " needs at least 2 values");
        }
        if (!policy) {
            policy = std::make_shared<TablePolicy>(id, static_cast<int>(logits.size()));
        } else if (static_cast<int>(logits.size()) != policy->action_count()) {
            throw ParseError("ragged logits file: row " + std::to_string(row) + " has " +
                             std::to_string(logits.size()) + " values, expected " +
                             std::to_string(policy->action_count()));
        }
        policy->insert(key, std::move(logits));
    }
    if (!policy) throw ValidationError("logits file is empty: " + path);
    return policy;
}

std::shared_ptr<FrozenPolicy> load_external_policy(const std::string& path, std::string id) {
    return TablePolicy::load(path, std::move(id));
}

LinearPolicy::LinearPolicy(std::string id, int action_count, int feature_count)
    : id_(std::move(id)),
      actions_(action_count),
      features_(feature_count),
      w_(static_cast<std::size_t>(action_count) * feature_count, 0.0),
      b_(action_count, 0.0) {
    if (actions_ < 2) throw ConfigError("linear policy needs at least 2 actions");
    if (features_ < 1) throw ConfigError("linear policy needs at least 1 feature");
}

PolicyLogits LinearPolicy::logits(const PolicyState& state) const {
    if (static_cast<int>(state.features.size()) != features_) {
        throw DomainError("feature width mismatch for policy '" + id_ + "'");
    }
    PolicyLogits out;
    out.logits.resize(actions_);
    for (int a = 0; a < actions_; ++a) {
        double acc = b_[a];
        const double* row = w_.data() + static_cast<std::size_t>(a) * features_;
        for (int f = 0; f < features_; ++f) acc += row[f] * state.features[f];
        out.logits[a] = acc;
    }
    return out;
}

double& LinearPolicy::weight(int action, int feature) {
    return w_.at(static_cast<std::size_t>(action) * features_ + feature);
}

double& LinearPolicy::bias(int action) { return b_.at(action); }

BiasPolicy::BiasPolicy(std::string id, std::vector<double> logits)
    : id_(std::move(id)), logits_(std::move(logits)) {
    if (logits_.size() < 2) throw ConfigError("bias policy needs at least 2 actions");
    for (double l : logits_) {
        if (!std::isfinite(l)) throw ConfigError("bias policy logits must be finite");
    }
}

std::shared_ptr<FrozenPolicy> train_toy_policy(EpisodicEnv& env, int episodes, std::uint64_t seed,
                                               const ToyTrainOptions& options) {
    if (episodes < 1) throw DomainError("toy training needs at least 1 episode");
    const int m = env.action_count();
    const int f = env.feature_count();
    auto policy = std::make_shared<LinearPolicy>("toy_" + std::to_string(seed), m, f);
    Rng rng(derive_seed(seed, "toy_train"));

    struct StepRecord {
        std::vector<double> features;
        ActionDistribution dist;
        int action = 0;
        double reward = 0.0;
    };

    for (int ep = 0; ep < episodes; ++ep) {
        PolicyState state = env.reset(rng);
        std::vector<StepRecord> trajectory;
        bool done = false;
        while (!done) {
            StepRecord rec;
            rec.features = state.features;
            rec.dist = softmax(policy->logits(state));
            rec.action = static_cast<int>(rng.sample_discrete(rec.dist.probs));
            EpisodicEnv::Step s = env.step(rec.action, rng);
            rec.reward = s.reward;
            done = s.done;
            state = std::move(s.state);
            trajectory.push_back(std::move(rec));
        }
        if (trajectory.empty()) continue;

        // Discounted returns-to-go with a mean baseline.
        std::vector<double> returns(trajectory.size());
        double g = 0.0;
        for (std::size_t i = trajectory.size(); i-- > 0;) {
            g = trajectory[i].reward + options.discount * g;
            returns[i] = g;
        }
        const double baseline =
            std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();

        for (std::size_t i = 0; i < trajectory.size(); ++i) {
            const StepRecord& rec = trajectory[i];
            const double advantage = returns[i] - baseline;
            for (int a = 0; a < m; ++a) {
                const double indicator = a == rec.action ? 1.0 : 0.0;
                const double grad_logit = indicator - rec.dist.probs[a];
                policy->bias(a) += options.learning_rate * advantage * grad_logit;
                for (int j = 0; j < f; ++j) {
                    policy->weight(a, j) +=
                        options.learning_rate * advantage * grad_logit * rec.features[j];
                }
            }
        }
    }
    return policy;
}

TunedPolicy::TunedPolicy(std::shared_ptr<const FrozenPolicy> base, SketchTemplate tmpl,
                         SketchParams params)
    : single_(std::move(base)), tmpl_(std::move(tmpl)), params_(std::move(params)) {
    if (!single_) throw ConfigError("tuned policy needs a base policy");
    if (tmpl_.mode().kind != SketchMode::Kind::single) {
        throw ConfigError("single-model base requires a single-model sketch");
    }
    validate_params(tmpl_, params_);
}

TunedPolicy::TunedPolicy(std::shared_ptr<const EnsemblePolicy> base, SketchTemplate tmpl,
                         SketchParams params)
    : ensemble_(std::move(base)), tmpl_(std::move(tmpl)), params_(std::move(params)) {
    if (!ensemble_) throw ConfigError("tuned policy needs a base ensemble");
    if (tmpl_.mode().kind != SketchMode::Kind::ensemble) {
        throw ConfigError("ensemble base requires an ensemble sketch");
    }
    if (tmpl_.mode().ensemble_size != ensemble_->size()) {
        throw ConfigError("sketch ensemble size must match the policy ensemble");
    }
    validate_params(tmpl_, params_);
}

TunedPolicy::Decision TunedPolicy::decide(const PolicyState& state,
                                          const MarketFeatures& features) const {
    const TuningDirective directive = interpret(tmpl_, params_, features);
    Decision out;
    out.trend = directive.trend;
    if (single_) {
        out.dist = temperature_tune(single_->logits(state), directive.temperature());
    } else {
        out.dist = ensemble_tune(*ensemble_, directive.weights(), state);
    }
    return out;
}

int TunedPolicy::action_count() const {
    return single_ ? single_->action_count() : ensemble_->action_count();
}

}  // namespace trendtune
