#include "pad/policynet/policy.hpp"

#include <algorithm>
#include <cmath>

#include "pad/errors.hpp"

namespace pad::policynet {

using namespace pad::numcore;

void ParamSet::add(std::string name, TensorPtr t) {
    items.emplace_back(std::move(name), std::move(t));
}

const TensorPtr& ParamSet::find(const std::string& name) const {
    for (const auto& [n, t] : items) {
        if (n == name) return t;
    }
    throw UsageError("parameter not found: " + name);
}

bool ParamSet::contains(const std::string& name) const {
    return std::any_of(items.begin(), items.end(),
                       [&name](const auto& it) { return it.first == name; });
}

std::vector<TensorPtr> ParamSet::tensors() const {
    std::vector<TensorPtr> out;
    out.reserve(items.size());
    for (const auto& [n, t] : items) out.push_back(t);
    return out;
}

std::vector<TensorPtr> ParamSet::tensors_with_prefix(const std::string& prefix) const {
    std::vector<TensorPtr> out;
    for (const auto& [n, t] : items) {
        if (n.rfind(prefix, 0) == 0) out.push_back(t);
    }
    return out;
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& [n, t] : items) out.push_back(n);
    return out;
}

int64_t ParamSet::scalar_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : items) n += t->numel();
    return n;
}

std::vector<TensorPtr> PolicyParams::all_tensors() const {
    std::vector<TensorPtr> out = theta_e.tensors();
    for (auto& t : theta_a.tensors()) out.push_back(t);
    for (auto& t : theta_s.tensors()) out.push_back(t);
    return out;
}

PolicyParams PolicyParams::clone() const {
    PolicyParams copy;
    copy.config = config;
    for (const ParamSet* src : {&theta_e, &theta_a, &theta_s}) {
        ParamSet* dst = src == &theta_e ? &copy.theta_e : (src == &theta_a ? &copy.theta_a : &copy.theta_s);
        for (const auto& [name, t] : src->items) {
            dst->add(name, Tensor::create(t->shape, t->data, t->requires_grad));
        }
    }
    return copy;
}

namespace {

// He-uniform weights (relu gain) so activations keep their scale through the
// deep conv stack; biases start at zero.
TensorPtr init_tensor(std::vector<int> shape, int fan_in, Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    const int n = shape_numel(shape);
    std::vector<float> data(static_cast<size_t>(n));
    for (float& v : data) v = rng.uniform(-bound, bound);
    return Tensor::create(std::move(shape), std::move(data), true);
}

TensorPtr init_bias(std::vector<int> shape) { return Tensor::zeros(std::move(shape), true); }

// Head trunk geometry: the first conv halves the spatial size (kernel 2 on
// even sizes, 3x3 stride-2 pad-1 on odd), the rest are size-preserving.
ConvSpec head_conv_spec(int layer_index, int size_at_layer) {
    if (layer_index == 0) {
        return size_at_layer % 2 == 0 ? ConvSpec{2, 2, 0} : ConvSpec{3, 2, 1};
    }
    return ConvSpec{3, 1, 1};
}

int head_output_size(const NetworkConfig& cfg) {
    int s = encoder_output_size(cfg);
    for (int i = 0; i < cfg.head_conv_layers; ++i) {
        const ConvSpec spec = head_conv_spec(i, s);
        s = (s + 2 * spec.padding - spec.kernel) / spec.stride + 1;
    }
    return s;
}

// Conv trunk + fc trunk shared by every head; `in_channels` differs for the
// IDM head (2F), `extra_fc_inputs` differs for critics (action concat).
void add_head(ParamSet& set, const std::string& prefix, const NetworkConfig& cfg, int in_channels,
              int extra_fc_inputs, int out_dim, Rng& rng) {
    int s = encoder_output_size(cfg);
    int ch = in_channels;
    for (int i = 0; i < cfg.head_conv_layers; ++i) {
        const ConvSpec spec = head_conv_spec(i, s);
        set.add(prefix + ".conv" + std::to_string(i) + ".w",
                init_tensor({cfg.filters, ch, spec.kernel, spec.kernel},
                            ch * spec.kernel * spec.kernel, rng));
        set.add(prefix + ".conv" + std::to_string(i) + ".b", init_bias({cfg.filters}));
        ch = cfg.filters;
        s = (s + 2 * spec.padding - spec.kernel) / spec.stride + 1;
    }
    // Critic-style extras (the action) are re-injected at every fc layer to
    // keep the action pathway strong against the much wider visual input.
    int width = ch * s * s;
    for (int i = 0; i < cfg.head_fc_layers; ++i) {
        set.add(prefix + ".fc" + std::to_string(i) + ".w",
                init_tensor({width + extra_fc_inputs, cfg.hidden}, width + extra_fc_inputs, rng));
        set.add(prefix + ".fc" + std::to_string(i) + ".b", init_bias({cfg.hidden}));
        width = cfg.hidden;
    }
    set.add(prefix + ".out.w", init_tensor({width, out_dim}, width, rng));
    set.add(prefix + ".out.b", init_bias({out_dim}));
}

// Trunk forward shared by all heads.
TensorPtr head_conv_stack(const TensorPtr& input, const ParamSet& set, const std::string& prefix,
                          const NetworkConfig& cfg) {
    TensorPtr h = input;
    int s = input->dim(2);
    for (int i = 0; i < cfg.head_conv_layers; ++i) {
        const ConvSpec spec = head_conv_spec(i, s);
        const std::string base = prefix + ".conv" + std::to_string(i);
        h = relu(conv2d(h, set.find(base + ".w"), set.find(base + ".b"), spec.stride, spec.padding));
        s = h->dim(2);
    }
    return h;
}

TensorPtr head_forward(const TensorPtr& input, const ParamSet& set, const std::string& prefix,
                       const NetworkConfig& cfg, const TensorPtr& fc_extra) {
    TensorPtr h = flatten2d(head_conv_stack(input, set, prefix, cfg));
    for (int i = 0; i < cfg.head_fc_layers; ++i) {
        if (fc_extra) h = concat_axis1(h, fc_extra);
        const std::string base = prefix + ".fc" + std::to_string(i);
        h = relu(dense(h, set.find(base + ".w"), set.find(base + ".b")));
    }
    return dense(h, set.find(prefix + ".out.w"), set.find(prefix + ".out.b"));
}

// Same trunk but exposing the last hidden layer (discrete actor needs both
// logits and a value readout from one trunk).
std::pair<TensorPtr, TensorPtr> head_forward_with_hidden(const TensorPtr& input,
                                                         const ParamSet& set,
                                                         const std::string& prefix,
                                                         const NetworkConfig& cfg) {
    TensorPtr h = flatten2d(head_conv_stack(input, set, prefix, cfg));
    for (int i = 0; i < cfg.head_fc_layers; ++i) {
        const std::string base = prefix + ".fc" + std::to_string(i);
        h = relu(dense(h, set.find(base + ".w"), set.find(base + ".b")));
    }
    return {dense(h, set.find(prefix + ".out.w"), set.find(prefix + ".out.b")), h};
}

}  // namespace

PolicyParams build(const NetworkConfig& config, uint64_t seed) {
    if (config.action_dim < 1) throw ConfigError("network: action_dim must be positive");
    encoder_output_size(config);  // validates conv geometry

    PolicyParams p;
    p.config = config;
    Rng rng(Rng::derive(seed, 0xB111D));

    // Encoder.
    int ch = config.frame_stack * 3;
    const auto plan = encoder_plan(config);
    for (size_t i = 0; i < plan.size(); ++i) {
        const ConvSpec& spec = plan[i];
        p.theta_e.add("e.conv" + std::to_string(i) + ".w",
                      init_tensor({config.filters, ch, spec.kernel, spec.kernel},
                                  ch * spec.kernel * spec.kernel, rng));
        p.theta_e.add("e.conv" + std::to_string(i) + ".b", init_bias({config.filters}));
        ch = config.filters;
    }

    // RL heads.
    if (config.action_space == ActionSpace::Continuous) {
        add_head(p.theta_a, "a.actor", config, config.filters, 0, 2 * config.action_dim, rng);
        // Start the policy with a usable exploration noise scale (~0.4)
        // instead of the clamp midpoint the soft clamp would give raw zeros.
        {
            const TensorPtr& out_bias = p.theta_a.find("a.actor.out.b");
            for (int d = 0; d < config.action_dim; ++d) {
                out_bias->data[static_cast<size_t>(config.action_dim + d)] = 0.55f;
            }
        }
        for (const char* q : {"a.q1", "a.q2"}) {
            add_head(p.theta_a, q, config, config.filters, config.action_dim, 1, rng);
        }
        // Targets start as copies of the online critics.
        for (const auto& [online, target] :
             std::vector<std::pair<std::string, std::string>>{{"a.q1", "a.t1"}, {"a.q2", "a.t2"}}) {
            std::vector<std::pair<std::string, TensorPtr>> copies;
            for (const auto& [name, t] : p.theta_a.items) {
                if (name.rfind(online, 0) == 0) {
                    copies.emplace_back(target + name.substr(online.size()),
                                        Tensor::create(t->shape, t->data, true));
                }
            }
            for (auto& [name, t] : copies) p.theta_a.add(std::move(name), std::move(t));
        }
        p.theta_a.add("a.log_alpha", Tensor::create({1}, {std::log(0.01f)}, true));
    } else {
        add_head(p.theta_a, "a.actor", config, config.filters, 0, config.action_dim, rng);
        // Value readout from the actor trunk's last hidden layer.
        p.theta_a.add("a.actor.value.w", init_tensor({config.hidden, 1}, config.hidden, rng));
        p.theta_a.add("a.actor.value.b", init_bias({1}));
    }

    // Self-supervised heads: inverse dynamics (pair input) and rotation.
    // IDM emits an action regression (continuous) or action logits (discrete);
    // both have width action_dim.
    add_head(p.theta_s, "s.idm", config, 2 * config.filters, 0, config.action_dim, rng);
    add_head(p.theta_s, "s.rot", config, config.filters, 0, 4, rng);
    return p;
}

TensorPtr encode(const TensorPtr& obs, const PolicyParams& params) {
    const NetworkConfig& cfg = params.config;
    if (obs->rank() != 4 || obs->dim(1) != cfg.frame_stack * 3 || obs->dim(2) != cfg.crop_size ||
        obs->dim(3) != cfg.crop_size) {
        throw DimensionError("encode: expected [N, k*3, crop, crop] input");
    }
    TensorPtr h = obs;
    const auto plan = encoder_plan(cfg);
    for (size_t i = 0; i < plan.size(); ++i) {
        const std::string base = "e.conv" + std::to_string(i);
        h = relu(conv2d(h, params.theta_e.find(base + ".w"), params.theta_e.find(base + ".b"),
                        plan[i].stride, plan[i].padding));
    }
    return h;
}

ActorOut actor_forward(const TensorPtr& features, const PolicyParams& params) {
    const NetworkConfig& cfg = params.config;
    ActorOut out;
    if (cfg.action_space == ActionSpace::Continuous) {
        TensorPtr o = head_forward(features, params.theta_a, "a.actor", cfg, nullptr);
        out.dist.mean = slice_axis1(o, 0, cfg.action_dim);
        // Soft clamp keeps log-std inside [min,max] while staying smooth.
        TensorPtr raw = slice_axis1(o, cfg.action_dim, cfg.action_dim);
        const float lo = cfg.log_std_min, hi = cfg.log_std_max;
        out.dist.log_std = affine(tanh_op(raw), 0.5f * (hi - lo), lo + 0.5f * (hi - lo));
    } else {
        auto [logits, hidden] = head_forward_with_hidden(features, params.theta_a, "a.actor", cfg);
        out.dist.logits = logits;
        out.value = dense(hidden, params.theta_a.find("a.actor.value.w"),
                          params.theta_a.find("a.actor.value.b"));
    }
    return out;
}

TensorPtr critic_forward(const TensorPtr& features, const TensorPtr& action,
                         const PolicyParams& params, const std::string& which) {
    if (params.config.action_space != ActionSpace::Continuous) {
        throw UsageError("critic_forward: continuous control only");
    }
    return head_forward(features, params.theta_a, "a." + which, params.config, action);
}

std::vector<std::vector<float>> act(const TensorPtr& features, const PolicyParams& params,
                                    ActMode mode, Rng* rng) {
    if (mode == ActMode::Sample && rng == nullptr) throw UsageError("act: sampling needs an rng");
    NoGradGuard guard;
    const NetworkConfig& cfg = params.config;
    ActorOut out = actor_forward(features, params);
    const int n = features->dim(0);
    std::vector<std::vector<float>> actions(static_cast<size_t>(n));
    if (cfg.action_space == ActionSpace::Continuous) {
        for (int i = 0; i < n; ++i) {
            std::vector<float> a(static_cast<size_t>(cfg.action_dim));
            for (int d = 0; d < cfg.action_dim; ++d) {
                const size_t k = static_cast<size_t>(i * cfg.action_dim + d);
                float u = out.dist.mean->data[k];
                if (mode == ActMode::Sample) {
                    u += std::exp(out.dist.log_std->data[k]) * rng->normal();
                }
                a[static_cast<size_t>(d)] = std::tanh(u);
            }
            actions[static_cast<size_t>(i)] = std::move(a);
        }
    } else {
        const int K = cfg.action_dim;
        for (int i = 0; i < n; ++i) {
            const float* row = out.dist.logits->data.data() + static_cast<size_t>(i) * K;
            int choice = 0;
            if (mode == ActMode::Mean) {
                for (int k = 1; k < K; ++k) {
                    if (row[k] > row[choice]) choice = k;
                }
            } else {
                // Sample from the soft-max distribution.
                float mx = row[0];
                for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
                float denom = 0.0f;
                for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
                float u = rng->next_float() * denom;
                for (int k = 0; k < K; ++k) {
                    u -= std::exp(row[k] - mx);
                    if (u <= 0.0f) {
                        choice = k;
                        break;
                    }
                    choice = k;
                }
            }
            actions[static_cast<size_t>(i)] = {static_cast<float>(choice)};
        }
    }
    return actions;
}

TensorPtr predict_inverse(const TensorPtr& features_t, const TensorPtr& features_t1,
                          const PolicyParams& params) {
    if (features_t->shape != features_t1->shape) {
        throw DimensionError("predict_inverse: feature shapes disagree");
    }
    return head_forward(concat_axis1(features_t, features_t1), params.theta_s, "s.idm",
                        params.config, nullptr);
}

TensorPtr predict_rotation(const TensorPtr& features, const PolicyParams& params) {
    return head_forward(features, params.theta_s, "s.rot", params.config, nullptr);
}

}  // namespace pad::policynet
