#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "gradcheck.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/ssl/augment.hpp"
#include "pad/ssl/objectives.hpp"
#include "refops.hpp"

using namespace pad;
using namespace pad::numcore;
using namespace pad::ssl;
using envs::Frame;
using envs::Observation;

namespace {

// Coordinate-encoded frame: channel 0 stores (x + y*size)/size^2, so the
// value at the crop's origin reveals the crop offsets exactly.
Observation coordinate_obs(int size, int k) {
    Observation obs;
    obs.size = size;
    for (int f = 0; f < k; ++f) {
        Frame frame(static_cast<size_t>(3 * size * size), 0.0f);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                frame[static_cast<size_t>(y) * size + x] =
                    static_cast<float>(x + y * size) / static_cast<float>(size * size);
            }
        }
        obs.frames.push_back(std::make_shared<Frame>(std::move(frame)));
    }
    return obs;
}

std::pair<int, int> decode_offsets(const Frame& cropped, int source) {
    const float v = cropped[0];
    const int code = static_cast<int>(std::lround(static_cast<double>(v) * source * source));
    return {code % source, code / source};
}

Observation random_obs(int size, int k, Rng& rng) {
    Observation obs;
    obs.size = size;
    for (int f = 0; f < k; ++f) {
        Frame frame(static_cast<size_t>(3 * size * size));
        for (float& v : frame) v = rng.uniform(0.0f, 1.0f);
        obs.frames.push_back(std::make_shared<Frame>(std::move(frame)));
    }
    return obs;
}

policynet::NetworkConfig miniature(policynet::ActionSpace space, int action_dim) {
    policynet::NetworkConfig c;
    c.frame_stack = 1;
    c.render_size = 12;
    c.crop_size = 8;
    c.encoder_conv_layers = 2;
    c.head_conv_layers = 1;
    c.head_fc_layers = 1;
    c.filters = 2;
    c.hidden = 6;
    c.action_dim = action_dim;
    c.action_space = space;
    return c;
}

// Finite differences need generic positions; zero biases sit on relu kinks.
void randomize_biases(policynet::PolicyParams& p, uint64_t seed) {
    Rng rng(seed);
    for (auto* set : {&p.theta_e, &p.theta_a, &p.theta_s}) {
        for (auto& [name, t] : set->items) {
            if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
                for (float& v : t->data) v = rng.uniform(-0.3f, 0.3f);
            }
        }
    }
}

void zero_out_layer(policynet::PolicyParams& p, const std::string& prefix) {
    for (auto& [name, t] : p.theta_s.items) {
        if (name == prefix + ".out.w" || name == prefix + ".out.b") {
            std::fill(t->data.begin(), t->data.end(), 0.0f);
        }
    }
}

}  // namespace

TEST_CASE("random crop: geometry, constants, stack consistency") {
    Rng rng(1);
    // Constant image stays constant under any crop.
    Observation flat;
    flat.size = 10;
    flat.frames.push_back(std::make_shared<Frame>(Frame(300, 0.7f)));
    CropRule rule{10, 6, CropPolicy::Random};
    auto cropped = random_crop(flat, rule, rng);
    CHECK(cropped.size == 6);
    for (float v : *cropped.frames[0]) CHECK(v == 0.7f);

    // Canonical 100 -> 84 geometry.
    Observation big = coordinate_obs(100, 1);
    CropRule canonical{100, 84, CropPolicy::Random};
    auto c = random_crop(big, canonical, rng);
    CHECK(c.size == 84);
    CHECK(static_cast<int>(c.frames[0]->size()) == 3 * 84 * 84);

    // Same rng seed, same offsets.
    Rng r1(42), r2(42);
    auto a = random_crop(big, canonical, r1);
    auto b = random_crop(big, canonical, r2);
    CHECK(decode_offsets(*a.frames[0], 100) == decode_offsets(*b.frames[0], 100));

    // All k frames of a stack share the offsets (marker decode).
    Observation stack = coordinate_obs(48, 3);
    CropRule desk{48, 40, CropPolicy::Random};
    for (int trial = 0; trial < 20; ++trial) {
        auto cc = random_crop(stack, desk, rng);
        const auto off0 = decode_offsets(*cc.frames[0], 48);
        CHECK(decode_offsets(*cc.frames[1], 48) == off0);
        CHECK(decode_offsets(*cc.frames[2], 48) == off0);
    }

    CHECK_THROWS_AS(random_crop(big, CropRule{48, 40, CropPolicy::Random}, rng), DimensionError);
}

TEST_CASE("center crop: identity, canonical offsets, idempotence") {
    Observation obs = coordinate_obs(100, 2);
    auto same = center_crop(obs, 100);
    CHECK(std::memcmp(same.frames[0]->data(), obs.frames[0]->data(),
                      obs.frames[0]->size() * sizeof(float)) == 0);

    auto c = center_crop(obs, 84);
    CHECK(decode_offsets(*c.frames[0], 100) == std::make_pair(8, 8));

    auto twice = center_crop(center_crop(obs, 84), 84);
    CHECK(std::memcmp(twice.frames[0]->data(), c.frames[0]->data(),
                      c.frames[0]->size() * sizeof(float)) == 0);
}

TEST_CASE("rotation forms the C4 group exactly") {
    Rng rng(2);
    Observation obs = random_obs(9, 1, rng);
    const Frame& f = *obs.frames[0];

    auto r0 = rotate_frame(f, 9, 0);
    CHECK(std::memcmp(r0.data(), f.data(), f.size() * sizeof(float)) == 0);

    auto r1 = rotate_frame(f, 9, 1);
    auto r1r1 = rotate_frame(r1, 9, 1);
    auto r2 = rotate_frame(f, 9, 2);
    CHECK(std::memcmp(r1r1.data(), r2.data(), f.size() * sizeof(float)) == 0);

    auto back = rotate_frame(r1, 9, 3);
    CHECK(std::memcmp(back.data(), f.data(), f.size() * sizeof(float)) == 0);

    auto r3 = rotate_frame(f, 9, 3);
    auto r2r1 = rotate_frame(r2, 9, 1);
    CHECK(std::memcmp(r2r1.data(), r3.data(), f.size() * sizeof(float)) == 0);

    CHECK_THROWS_AS(rotate_frame(Frame(3 * 4 * 5), 4, 1), DimensionError);
}

TEST_CASE("idm batches: independent offsets for consecutive observations") {
    Rng rng(3);
    envs::Transition tr;
    tr.s_t = coordinate_obs(48, 3);
    tr.s_t1 = coordinate_obs(48, 3);
    tr.a_t = envs::Action::cont(0.3f, -0.2f);

    std::vector<const envs::Transition*> rows(16, &tr);
    SslBatch batch = make_idm_batch(rows, 40, rng);
    REQUIRE(batch.size() == 16);
    bool offsets_differ = false;
    std::set<std::pair<int, int>> distinct;
    for (int i = 0; i < 16; ++i) {
        const auto o1 = decode_offsets(*batch.obs_t[static_cast<size_t>(i)].frames[0], 48);
        const auto o2 = decode_offsets(*batch.obs_t1[static_cast<size_t>(i)].frames[0], 48);
        if (o1 != o2) offsets_differ = true;
        distinct.insert(o1);
    }
    CHECK(offsets_differ);
    CHECK(distinct.size() >= 2);

    // Deployment batch: 32 augmented copies of the latest transition.
    SslBatch deploy = make_deploy_batch(SslTask::Idm, &tr, nullptr, 32, 40, rng);
    CHECK(deploy.size() == 32);

    // No transition yet: empty-batch signal.
    SslBatch empty = make_deploy_batch(SslTask::Idm, nullptr, nullptr, 32, 40, rng);
    CHECK(empty.empty());
}

TEST_CASE("rotation batches: uniform labels, matching rotations") {
    Rng rng(4);
    Observation obs = coordinate_obs(12, 1);
    std::vector<const Observation*> rows(10000, &obs);
    SslBatch batch = make_rotation_batch(rows, 8, rng);
    std::array<int, 4> counts{};
    for (int l : batch.labels) counts[static_cast<size_t>(l)]++;
    for (int k = 0; k < 4; ++k) {
        CHECK(counts[static_cast<size_t>(k)] > 2500 - 125);
        CHECK(counts[static_cast<size_t>(k)] < 2500 + 125);
    }
}

TEST_CASE("idm loss analytics") {
    Rng rng(5);
    // Continuous: zeroed output layer predicts 0; actions (0.5,-0.5) -> 0.25.
    {
        auto cfg = miniature(policynet::ActionSpace::Continuous, 2);
        auto p = policynet::build(cfg, 1);
        zero_out_layer(p, "s.idm");
        envs::Transition tr;
        tr.s_t = random_obs(12, 1, rng);
        tr.s_t1 = random_obs(12, 1, rng);
        tr.a_t = envs::Action::cont(0.5f, -0.5f);
        std::vector<const envs::Transition*> rows(8, &tr);
        SslBatch batch = make_idm_batch(rows, 8, rng);
        auto loss = idm_loss(batch, p);
        CHECK(std::fabs(loss->item() - 0.25f) < 1e-6f);

        // Predictions equal to the true actions give zero loss.
        envs::Transition tr0 = tr;
        tr0.a_t = envs::Action::cont(0.0f, 0.0f);
        std::vector<const envs::Transition*> rows0(8, &tr0);
        SslBatch batch0 = make_idm_batch(rows0, 8, rng);
        CHECK(idm_loss(batch0, p)->item() < 1e-6f);
    }
    // Discrete with uniform logits: ln 4.
    {
        auto cfg = miniature(policynet::ActionSpace::Discrete, 4);
        auto p = policynet::build(cfg, 2);
        zero_out_layer(p, "s.idm");
        envs::Transition tr;
        tr.s_t = random_obs(12, 1, rng);
        tr.s_t1 = random_obs(12, 1, rng);
        tr.a_t = envs::Action::disc(2);
        std::vector<const envs::Transition*> rows(6, &tr);
        SslBatch batch = make_idm_batch(rows, 8, rng);
        auto loss = idm_loss(batch, p);
        CHECK(std::fabs(loss->item() - std::log(4.0f)) < 1e-4f);
    }
    // Empty batch rejected.
    {
        auto cfg = miniature(policynet::ActionSpace::Continuous, 2);
        auto p = policynet::build(cfg, 3);
        SslBatch batch;
        batch.task = SslTask::Idm;
        CHECK_THROWS_AS(idm_loss(batch, p), UsageError);
    }
}

TEST_CASE("rotation loss analytics and one-hot margin limit") {
    Rng rng(6);
    auto cfg = miniature(policynet::ActionSpace::Discrete, 4);
    auto p = policynet::build(cfg, 4);
    zero_out_layer(p, "s.rot");
    Observation obs = random_obs(12, 1, rng);
    std::vector<const Observation*> rows(8, &obs);
    SslBatch batch = make_rotation_batch(rows, 8, rng);
    auto loss = rotation_loss(batch, p);
    CHECK(std::fabs(loss->item() - std::log(4.0f)) < 1e-4f);

    // Cross-entropy drops to zero as the correct-logit margin grows.
    for (float margin : {5.0f, 12.0f, 30.0f}) {
        std::vector<float> logits = {margin, 0.0f, 0.0f, 0.0f};
        auto z = Tensor::create({1, 4}, logits);
        auto ce = cross_entropy_logits(z, {0});
        if (margin >= 30.0f) CHECK(ce->item() < 1e-6f);
    }

    SslBatch empty;
    empty.task = SslTask::Rotation;
    CHECK_THROWS_AS(rotation_loss(empty, p), UsageError);
}

TEST_CASE("rotation loss gradient passes finite differences on a miniature encoder") {
    Rng rng(7);
    auto cfg = miniature(policynet::ActionSpace::Discrete, 4);
    auto p = policynet::build(cfg, 5);
    randomize_biases(p, 50);
    Observation obs = random_obs(12, 1, rng);
    std::vector<const Observation*> rows(3, &obs);
    SslBatch batch = make_rotation_batch(rows, 8, rng);
    auto loss = rotation_loss(batch, p);
    backward(loss);

    // Double replica: per row encode (two k2s2 convs), rotation trunk
    // (k3p1 conv, fc, out), then mean cross-entropy.
    auto batch_tensor = obs_batch_tensor(batch.obs);
    const auto obs_d = gradcheck::widen(batch_tensor->data);
    const int n = batch.size();
    auto eval = [&](const std::vector<double>& w0) {
        std::vector<std::vector<double>> ws = {w0, gradcheck::widen(p.theta_e.find("e.conv1.w")->data)};
        std::vector<std::vector<double>> bs = {gradcheck::widen(p.theta_e.find("e.conv0.b")->data),
                                               gradcheck::widen(p.theta_e.find("e.conv1.b")->data)};
        std::vector<double> all_logits;
        const int per = 3 * 8 * 8;
        for (int i = 0; i < n; ++i) {
            std::vector<double> one(obs_d.begin() + i * per, obs_d.begin() + (i + 1) * per);
            int oh = 0, ow = 0;
            auto h = refops::conv2d(one, {1, 3, 8, 8}, ws[0], 2, 2, 2, bs[0], 2, 0, oh, ow);
            h = refops::relu(h);
            auto h2 = refops::conv2d(h, {1, 2, oh, ow}, ws[1], 2, 2, 2, bs[1], 2, 0, oh, ow);
            h2 = refops::relu(h2);
            auto h3 = refops::conv2d(h2, {1, 2, oh, ow},
                                     gradcheck::widen(p.theta_s.find("s.rot.conv0.w")->data), 2, 2,
                                     2, gradcheck::widen(p.theta_s.find("s.rot.conv0.b")->data), 2,
                                     0, oh, ow);
            h3 = refops::relu(h3);
            auto hid = refops::dense(h3, 1, static_cast<int>(h3.size()),
                                     gradcheck::widen(p.theta_s.find("s.rot.fc0.w")->data),
                                     cfg.hidden, gradcheck::widen(p.theta_s.find("s.rot.fc0.b")->data));
            hid = refops::relu(hid);
            auto out = refops::dense(hid, 1, cfg.hidden,
                                     gradcheck::widen(p.theta_s.find("s.rot.out.w")->data), 4,
                                     gradcheck::widen(p.theta_s.find("s.rot.out.b")->data));
            all_logits.insert(all_logits.end(), out.begin(), out.end());
        }
        return refops::cross_entropy(all_logits, n, 4, batch.labels);
    };
    CHECK(gradcheck::check_tensor(p.theta_e.find("e.conv0.w"), eval) < gradcheck::kMaxRelErr);
}
