#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "gradcheck.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/policynet/policy.hpp"
#include "refops.hpp"

using namespace pad;
using namespace pad::numcore;
using namespace pad::policynet;

namespace {

NetworkConfig miniature() {
    NetworkConfig c;
    c.frame_stack = 1;
    c.render_size = 12;
    c.crop_size = 8;
    c.encoder_conv_layers = 2;
    c.head_conv_layers = 1;
    c.head_fc_layers = 1;
    c.filters = 2;
    c.hidden = 6;
    c.action_dim = 2;
    c.action_space = ActionSpace::Continuous;
    return c;
}

TensorPtr random_obs_batch(const NetworkConfig& cfg, int n, Rng& rng) {
    std::vector<float> data(static_cast<size_t>(n * cfg.frame_stack * 3 * cfg.crop_size * cfg.crop_size));
    for (float& v : data) v = rng.uniform(0.0f, 1.0f);
    return Tensor::create({n, cfg.frame_stack * 3, cfg.crop_size, cfg.crop_size}, std::move(data));
}

bool bit_equal(const TensorPtr& a, const TensorPtr& b) {
    return a->shape == b->shape &&
           std::memcmp(a->data.data(), b->data.data(), a->data.size() * sizeof(float)) == 0;
}

// Finite differences need generic parameter positions; zero-initialized
// biases would park pre-activations on the relu kink.
void randomize_biases(PolicyParams& p, uint64_t seed) {
    Rng rng(seed);
    for (auto* set : {&p.theta_e, &p.theta_a, &p.theta_s}) {
        for (auto& [name, t] : set->items) {
            if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
                for (float& v : t->data) v = rng.uniform(-0.3f, 0.3f);
            }
        }
    }
}

// Double-precision replica of the miniature encoder (two k2s2 convs + relu),
// built on the independent refops kernels.
std::vector<double> ref_encode_mini(const std::vector<double>& obs, int crop,
                                    const std::vector<std::vector<double>>& ws,
                                    const std::vector<std::vector<double>>& bs, int filters,
                                    int in_ch, int& out_size) {
    int oh = 0, ow = 0;
    auto h = refops::conv2d(obs, {1, in_ch, crop, crop}, ws[0], filters, 2, 2, bs[0], 2, 0, oh, ow);
    h = refops::relu(h);
    auto h2 = refops::conv2d(h, {1, filters, oh, ow}, ws[1], filters, 2, 2, bs[1], 2, 0, oh, ow);
    out_size = oh;
    return refops::relu(h2);
}

}  // namespace

TEST_CASE("build is deterministic and partitions are disjoint and exhaustive") {
    const NetworkConfig cfg = NetworkConfig::desk(ActionSpace::Continuous, 2);
    PolicyParams a = build(cfg, 99);
    PolicyParams b = build(cfg, 99);
    REQUIRE(a.theta_e.items.size() == b.theta_e.items.size());
    for (size_t i = 0; i < a.theta_e.items.size(); ++i) {
        CHECK(a.theta_e.items[i].first == b.theta_e.items[i].first);
        CHECK(bit_equal(a.theta_e.items[i].second, b.theta_e.items[i].second));
    }
    for (size_t i = 0; i < a.theta_a.items.size(); ++i) {
        CHECK(bit_equal(a.theta_a.items[i].second, b.theta_a.items[i].second));
    }
    for (size_t i = 0; i < a.theta_s.items.size(); ++i) {
        CHECK(bit_equal(a.theta_s.items[i].second, b.theta_s.items[i].second));
    }
    PolicyParams c = build(cfg, 100);
    CHECK_FALSE(bit_equal(a.theta_e.items[0].second, c.theta_e.items[0].second));

    // Disjoint names, union covers every tensor.
    std::set<std::string> names;
    size_t total = 0;
    for (const ParamSet* set : {&a.theta_e, &a.theta_a, &a.theta_s}) {
        for (const auto& [n, t] : set->items) {
            CHECK(names.insert(n).second);
            ++total;
        }
    }
    CHECK(total == a.all_tensors().size());
}

TEST_CASE("desk encoder geometry follows the conv arithmetic") {
    const NetworkConfig cfg = NetworkConfig::desk(ActionSpace::Continuous, 2);
    // 40 -> 20 -> 10 -> 10 -> 10
    CHECK(encoder_output_size(cfg) == 10);
    CHECK(encoder_plan(cfg).size() == 4);

    CHECK(encoder_output_size(NetworkConfig::canonical_control(6)) == 21);
    CHECK(encoder_plan(NetworkConfig::canonical_control(6)).size() == 8);
    CHECK(encoder_output_size(NetworkConfig::canonical_navigation(4)) == 21);
    CHECK(encoder_plan(NetworkConfig::canonical_navigation(4)).size() == 6);

    NetworkConfig bad = cfg;
    bad.crop_size = 41;  // cannot halve
    CHECK_THROWS_AS(build(bad, 1), ConfigError);
    NetworkConfig bad2 = cfg;
    bad2.crop_size = 48;  // crop must be < render
    CHECK_THROWS_AS(build(bad2, 1), ConfigError);

    PolicyParams p = build(cfg, 7);
    Rng rng(3);
    auto obs = random_obs_batch(cfg, 2, rng);
    auto f = encode(obs, p);
    CHECK(f->shape == std::vector<int>{2, cfg.filters, 10, 10});
}

TEST_CASE("encode: batch independence and input sensitivity") {
    const NetworkConfig cfg = miniature();
    PolicyParams p = build(cfg, 11);
    Rng rng(4);
    auto batch = random_obs_batch(cfg, 4, rng);
    auto single = Tensor::create({1, cfg.frame_stack * 3, cfg.crop_size, cfg.crop_size},
                                 std::vector<float>(batch->data.begin(),
                                                    batch->data.begin() + batch->numel() / 4));
    NoGradGuard guard;
    auto f_batch = encode(batch, p);
    auto f_single = encode(single, p);
    const int per = f_single->numel();
    CHECK(std::memcmp(f_batch->data.data(), f_single->data.data(),
                      static_cast<size_t>(per) * sizeof(float)) == 0);

    // Distinct observations give distinct features.
    auto other = random_obs_batch(cfg, 1, rng);
    auto f_other = encode(other, p);
    CHECK(std::memcmp(f_other->data.data(), f_single->data.data(),
                      static_cast<size_t>(per) * sizeof(float)) != 0);

    CHECK_THROWS_AS(encode(Tensor::zeros({1, 3, 9, 9}), p), DimensionError);
}

TEST_CASE("act: determinism, squash bounds, discrete argmax") {
    Rng rng(5);
    // Continuous
    {
        const NetworkConfig cfg = miniature();
        PolicyParams p = build(cfg, 21);
        auto obs = random_obs_batch(cfg, 3, rng);
        NoGradGuard guard;
        auto f = encode(obs, p);
        auto a1 = act(f, p, ActMode::Mean, nullptr);
        auto a2 = act(f, p, ActMode::Mean, nullptr);
        CHECK(a1 == a2);
        Rng arng(9);
        auto sampled = act(f, p, ActMode::Sample, &arng);
        for (const auto& row : {a1, sampled}) {
            for (const auto& a : row) {
                REQUIRE(a.size() == 2);
                for (float v : a) {
                    CHECK(v >= -1.0f);
                    CHECK(v <= 1.0f);
                }
            }
        }
    }
    // Discrete
    {
        NetworkConfig cfg = miniature();
        cfg.action_space = ActionSpace::Discrete;
        cfg.action_dim = 4;
        PolicyParams p = build(cfg, 22);
        auto obs = random_obs_batch(cfg, 3, rng);
        NoGradGuard guard;
        auto f = encode(obs, p);
        auto out = actor_forward(f, p);
        auto mean_actions = act(f, p, ActMode::Mean, nullptr);
        for (int i = 0; i < 3; ++i) {
            const float* row = out.dist.logits->data.data() + static_cast<size_t>(i) * 4;
            int argmax = 0;
            for (int k = 1; k < 4; ++k) {
                if (row[k] > row[argmax]) argmax = k;
            }
            CHECK(static_cast<int>(mean_actions[static_cast<size_t>(i)][0]) == argmax);
        }
        CHECK(out.value->shape == std::vector<int>{3, 1});
    }
}

TEST_CASE("ssl heads: shapes, order sensitivity, rotation logits") {
    const NetworkConfig cfg = miniature();
    PolicyParams p = build(cfg, 31);
    Rng rng(6);
    NoGradGuard guard;
    auto f1 = encode(random_obs_batch(cfg, 2, rng), p);
    auto f2 = encode(random_obs_batch(cfg, 2, rng), p);

    auto pred = predict_inverse(f1, f2, p);
    CHECK(pred->shape == std::vector<int>{2, cfg.action_dim});
    auto swapped = predict_inverse(f2, f1, p);
    CHECK(std::memcmp(pred->data.data(), swapped->data.data(),
                      pred->data.size() * sizeof(float)) != 0);

    auto logits = predict_rotation(f1, p);
    CHECK(logits->shape == std::vector<int>{2, 4});
    auto probs = softmax(logits, 1);
    for (int i = 0; i < 2; ++i) {
        float row = 0.0f;
        for (int k = 0; k < 4; ++k) row += probs->data[static_cast<size_t>(i * 4 + k)];
        CHECK(std::fabs(row - 1.0f) < 1e-6f);
    }
}

TEST_CASE("finite differences reach theta_e through encode") {
    const NetworkConfig cfg = miniature();
    PolicyParams p = build(cfg, 41);
    randomize_biases(p, 410);
    Rng rng(7);
    auto obs = random_obs_batch(cfg, 1, rng);
    auto loss = mean_all(encode(obs, p));
    backward(loss);

    const auto obs_d = gradcheck::widen(obs->data);
    auto eval = [&](int perturbed, const std::vector<double>& values) {
        std::vector<std::vector<double>> ws = {gradcheck::widen(p.theta_e.find("e.conv0.w")->data),
                                               gradcheck::widen(p.theta_e.find("e.conv1.w")->data)};
        std::vector<std::vector<double>> bs = {gradcheck::widen(p.theta_e.find("e.conv0.b")->data),
                                               gradcheck::widen(p.theta_e.find("e.conv1.b")->data)};
        if (perturbed == 0) ws[0] = values;
        if (perturbed == 1) bs[0] = values;
        if (perturbed == 2) ws[1] = values;
        if (perturbed == 3) bs[1] = values;
        int out_size = 0;
        auto f = ref_encode_mini(obs_d, cfg.crop_size, ws, bs, cfg.filters, 3, out_size);
        double acc = 0.0;
        for (double v : f) acc += v;
        return acc / static_cast<double>(f.size());
    };
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv0.w"), [&](const std::vector<double>& v) {
              return eval(0, v);
          }) < gradcheck::kMaxRelErr);
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv0.b"), [&](const std::vector<double>& v) {
              return eval(1, v);
          }) < gradcheck::kMaxRelErr);
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv1.w"), [&](const std::vector<double>& v) {
              return eval(2, v);
          }) < gradcheck::kMaxRelErr);
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv1.b"), [&](const std::vector<double>& v) {
              return eval(3, v);
          }) < gradcheck::kMaxRelErr);
}

TEST_CASE("finite differences confirm both IDM encode paths feed theta_e") {
    const NetworkConfig cfg = miniature();
    PolicyParams p = build(cfg, 51);
    randomize_biases(p, 510);
    Rng rng(8);
    auto obs_a = random_obs_batch(cfg, 1, rng);
    auto obs_b = random_obs_batch(cfg, 1, rng);
    auto f_t = encode(obs_a, p);
    auto f_t1 = encode(obs_b, p);
    auto pred = predict_inverse(f_t, f_t1, p);
    Rng crng(9);
    std::vector<double> coeffs;
    {
        std::vector<float> c(static_cast<size_t>(pred->numel()));
        for (size_t i = 0; i < c.size(); ++i) {
            c[i] = crng.uniform(0.5f, 1.5f);
            coeffs.push_back(static_cast<double>(c[i]));
        }
        backward(sum_all(mul(pred, Tensor::create(pred->shape, std::move(c)))));
    }

    // Full double replica: encode both observations, concat channels, IDM
    // trunk (one k3p1 conv + relu, flatten, one fc + relu, out).
    const auto oa = gradcheck::widen(obs_a->data);
    const auto ob = gradcheck::widen(obs_b->data);
    auto eval_conv0w = [&](const std::vector<double>& w0) {
        std::vector<std::vector<double>> ws = {w0, gradcheck::widen(p.theta_e.find("e.conv1.w")->data)};
        std::vector<std::vector<double>> bs = {gradcheck::widen(p.theta_e.find("e.conv0.b")->data),
                                               gradcheck::widen(p.theta_e.find("e.conv1.b")->data)};
        int s = 0;
        auto fa = ref_encode_mini(oa, cfg.crop_size, ws, bs, cfg.filters, 3, s);
        auto fb = ref_encode_mini(ob, cfg.crop_size, ws, bs, cfg.filters, 3, s);
        std::vector<double> cat;
        cat.insert(cat.end(), fa.begin(), fa.end());
        cat.insert(cat.end(), fb.begin(), fb.end());
        int oh = 0, ow = 0;
        auto h = refops::conv2d(cat, {1, 2 * cfg.filters, s, s},
                                gradcheck::widen(p.theta_s.find("s.idm.conv0.w")->data), cfg.filters,
                                2, 2, gradcheck::widen(p.theta_s.find("s.idm.conv0.b")->data), 2, 0,
                                oh, ow);
        h = refops::relu(h);
        auto hid = refops::dense(h, 1, static_cast<int>(h.size()),
                                 gradcheck::widen(p.theta_s.find("s.idm.fc0.w")->data), cfg.hidden,
                                 gradcheck::widen(p.theta_s.find("s.idm.fc0.b")->data));
        hid = refops::relu(hid);
        auto out = refops::dense(hid, 1, cfg.hidden,
                                 gradcheck::widen(p.theta_s.find("s.idm.out.w")->data),
                                 cfg.action_dim, gradcheck::widen(p.theta_s.find("s.idm.out.b")->data));
        return refops::dot(out, coeffs);
    };
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv0.w"), eval_conv0w) < gradcheck::kMaxRelErr);
}
