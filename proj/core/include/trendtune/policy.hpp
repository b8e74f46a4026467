#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trendtune/rng.hpp"
#include "trendtune/sketch.hpp"

namespace trendtune {

// Probability distribution over a discrete action set.
struct ActionDistribution {
    std::vector<double> probs;
};

// Throws ValidationError unless probs are non-negative and sum to 1
// within tol, with at least 2 actions.
void validate_distribution(const ActionDistribution& dist, double tol = 1e-9);

// Raw (pre-softmax) action scores for one state.
struct PolicyLogits {
    std::vector<double> logits;
};

// A state as seen by a policy: a deterministic join key plus numeric
// features. Keys are "asset@timestamp" for trading and "order@step" for
// execution, so externally computed logits line up exactly.
struct PolicyState {
    std::string key;
    std::vector<double> features;
};

// A trained decision model with immutable weights. Evaluation is
// deterministic per state and never mutates the policy.
class FrozenPolicy {
public:
    virtual ~FrozenPolicy() = default;
    virtual PolicyLogits logits(const PolicyState& state) const = 0;
    virtual int action_count() const = 0;
    virtual const std::string& id() const = 0;
};

// k ≥ 2 frozen policies over one shared action set.
class EnsemblePolicy {
public:
    explicit EnsemblePolicy(std::vector<std::shared_ptr<const FrozenPolicy>> subs);

    int size() const { return static_cast<int>(subs_.size()); }
    int action_count() const { return subs_[0]->action_count(); }
    const FrozenPolicy& sub(int i) const { return *subs_.at(i); }
    std::shared_ptr<const FrozenPolicy> sub_ptr(int i) const { return subs_.at(i); }
    const std::string& id() const { return id_; }

private:
    std::vector<std::shared_ptr<const FrozenPolicy>> subs_;
    std::string id_;
};

// Numerically stable softmax (max-subtraction); equals
// temperature_tune(logits, 1).
ActionDistribution softmax(const PolicyLogits& logits);

// probs_i = exp(logit_i/phi) / Σ_j exp(logit_j/phi). Large phi flattens
// the distribution, small phi sharpens it; the argmax never moves.
ActionDistribution temperature_tune(const PolicyLogits& logits, double phi);

// Convex mixture of the sub-policies' softmax distributions:
// π̃(a) = Σ_i w_i · softmax(logits_i)(a). Weights must be non-negative
// and sum to 1 within 1e-6.
ActionDistribution ensemble_tune(const EnsemblePolicy& ensemble, std::span<const double> weights,
                                 const PolicyState& state);

// Lookup-table policy backed by an external logits file. Records are
// CSV lines `state_key,logit_0,...,logit_{m-1}` with a uniform m.
class TablePolicy : public FrozenPolicy {
public:
    TablePolicy(std::string id, int action_count);

    void insert(const std::string& key, std::vector<double> logits);
    PolicyLogits logits(const PolicyState& state) const override;
    int action_count() const override { return action_count_; }
    const std::string& id() const override { return id_; }
    std::size_t size() const { return table_.size(); }

    // Deterministic export: rows sorted by key, full double precision.
    void save(const std::string& path) const;
    static std::shared_ptr<TablePolicy> load(const std::string& path, std::string id = "");

private:
    std::string id_;
    int action_count_ = 0;
    std::map<std::string, std::vector<double>> table_;
};

// Loads an external-logits file; the file stem becomes the policy id
// unless one is given.
std::shared_ptr<FrozenPolicy> load_external_policy(const std::string& path, std::string id = "");

// Linear-softmax policy: logits = W·features + b. Used by the toy
// trainer and as a deterministic stand-in for large DRL backbones.
class LinearPolicy : public FrozenPolicy {
public:
    LinearPolicy(std::string id, int action_count, int feature_count);

    PolicyLogits logits(const PolicyState& state) const override;
    int action_count() const override { return actions_; }
    const std::string& id() const override { return id_; }
    int feature_count() const { return features_; }

    double& weight(int action, int feature);
    double& bias(int action);
    const std::vector<double>& weights() const { return w_; }
    const std::vector<double>& biases() const { return b_; }

private:
    std::string id_;
    int actions_ = 0;
    int features_ = 0;
    std::vector<double> w_;  // row-major actions × features
    std::vector<double> b_;
};

// Constant-logits policy: ignores state. Handy for crafted fixtures and
// planted-regime evaluations.
class BiasPolicy : public FrozenPolicy {
public:
    BiasPolicy(std::string id, std::vector<double> logits);
    PolicyLogits logits(const PolicyState&) const override { return {logits_}; }
    int action_count() const override { return static_cast<int>(logits_.size()); }
    const std::string& id() const override { return id_; }

private:
    std::string id_;
    std::vector<double> logits_;
};

// Episodic environment contract for the toy trainer. Randomness flows
// through the caller-supplied Rng so rollouts are reproducible.
class EpisodicEnv {
public:
    virtual ~EpisodicEnv() = default;
    virtual int action_count() const = 0;
    virtual int feature_count() const = 0;
    virtual PolicyState reset(Rng& rng) = 0;
    struct Step {
        PolicyState state;
        double reward = 0.0;
        bool done = false;
    };
    virtual Step step(int action, Rng& rng) = 0;
};

struct ToyTrainOptions {
    double learning_rate = 0.01;
    double discount = 1.0;
};

// Vanilla episodic policy gradient (REINFORCE) with a mean-return
// baseline over a linear-softmax policy. Weights start at zero, so a
// zero-learning-rate run returns all-zero logits. Deterministic given
// the seed; the returned policy is frozen.
std::shared_ptr<FrozenPolicy> train_toy_policy(EpisodicEnv& env, int episodes, std::uint64_t seed,
                                               const ToyTrainOptions& options = {});

// A frozen policy composed with the sketch: each decision first labels
// the market via interpret(), then tunes the base policy with that
// trend's directive (temperature for a single model, mixture weights
// for an ensemble). The base is never mutated.
class TunedPolicy {
public:
    TunedPolicy(std::shared_ptr<const FrozenPolicy> base, SketchTemplate tmpl, SketchParams params);
    TunedPolicy(std::shared_ptr<const EnsemblePolicy> base, SketchTemplate tmpl,
                SketchParams params);

    struct Decision {
        ActionDistribution dist;
        TrendLabel trend = TrendLabel::oscillation;
    };
    Decision decide(const PolicyState& state, const MarketFeatures& features) const;

    int action_count() const;
    const SketchTemplate& sketch() const { return tmpl_; }
    const SketchParams& params() const { return params_; }

private:
    std::shared_ptr<const FrozenPolicy> single_;
    std::shared_ptr<const EnsemblePolicy> ensemble_;
    SketchTemplate tmpl_;
    SketchParams params_;
};

}  // namespace trendtune
