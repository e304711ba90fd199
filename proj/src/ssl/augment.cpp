#include "pad/ssl/augment.hpp"

#include "pad/errors.hpp"

namespace pad::ssl {

namespace {

Frame crop_frame(const Frame& src, int source, int target, int off_x, int off_y) {
    Frame out(static_cast<size_t>(3 * target * target));
    for (int ch = 0; ch < 3; ++ch) {
        const float* src_ch = src.data() + static_cast<size_t>(ch) * source * source;
        float* dst_ch = out.data() + static_cast<size_t>(ch) * target * target;
        for (int y = 0; y < target; ++y) {
            const float* row = src_ch + static_cast<size_t>(y + off_y) * source + off_x;
            std::copy(row, row + target, dst_ch + static_cast<size_t>(y) * target);
        }
    }
    return out;
}

}  // namespace

Observation crop_at(const Observation& obs, int target_size, int off_x, int off_y) {
    const int source = obs.size;
    if (target_size > source) throw DimensionError("crop: target larger than source");
    if (off_x < 0 || off_y < 0 || off_x + target_size > source || off_y + target_size > source) {
        throw DimensionError("crop: offsets out of range");
    }
    Observation out;
    out.size = target_size;
    out.frames.reserve(obs.frames.size());
    for (const auto& f : obs.frames) {
        out.frames.push_back(
            std::make_shared<Frame>(crop_frame(*f, source, target_size, off_x, off_y)));
    }
    return out;
}

Observation random_crop(const Observation& obs, const CropRule& rule, Rng& rng) {
    if (rule.policy != CropPolicy::Random) throw UsageError("random_crop: rule.policy must be random");
    if (obs.size != rule.source_size) throw DimensionError("random_crop: source size mismatch");
    const int span = rule.source_size - rule.target_size;
    const int off_x = span == 0 ? 0 : rng.uniform_int(0, span);
    const int off_y = span == 0 ? 0 : rng.uniform_int(0, span);
    return crop_at(obs, rule.target_size, off_x, off_y);
}

Observation center_crop(const Observation& obs, int target_size) {
    const int off = (obs.size - target_size) / 2;
    return crop_at(obs, target_size, off, off);
}

Frame rotate_frame(const Frame& frame, int size, int quarter_turns) {
    if (static_cast<int>(frame.size()) != 3 * size * size) {
        throw DimensionError("rotate: frame is not square 3xSxS");
    }
    const int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return frame;
    Frame out(frame.size());
    const int plane = size * size;
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = frame.data() + static_cast<size_t>(ch) * plane;
        float* dst = out.data() + static_cast<size_t>(ch) * plane;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                int nx = x, ny = y;
                // Counter-clockwise by q quarter turns.
                switch (q) {
                    case 1: nx = y; ny = size - 1 - x; break;
                    case 2: nx = size - 1 - x; ny = size - 1 - y; break;
                    case 3: nx = size - 1 - y; ny = x; break;
                    default: break;
                }
                dst[static_cast<size_t>(ny) * size + nx] = src[static_cast<size_t>(y) * size + x];
            }
        }
    }
    return out;
}

Observation rotate(const Observation& obs, int quarter_turns) {
    Observation out;
    out.size = obs.size;
    out.frames.reserve(obs.frames.size());
    for (const auto& f : obs.frames) {
        out.frames.push_back(std::make_shared<Frame>(rotate_frame(*f, obs.size, quarter_turns)));
    }
    return out;
}

numcore::TensorPtr crop_batch_tensor(const std::vector<const Observation*>& obs, int crop_size,
                                     Rng& rng) {
    if (obs.empty()) throw UsageError("crop_batch_tensor: empty batch");
    const int n = static_cast<int>(obs.size());
    const int k = obs[0]->frame_stack();
    const int per = k * 3 * crop_size * crop_size;
    std::vector<float> data(static_cast<size_t>(n) * per);
    for (int i = 0; i < n; ++i) {
        CropRule rule{obs[static_cast<size_t>(i)]->size, crop_size, CropPolicy::Random};
        random_crop(*obs[static_cast<size_t>(i)], rule, rng)
            .write(data.data() + static_cast<size_t>(i) * per);
    }
    return numcore::Tensor::create({n, k * 3, crop_size, crop_size}, std::move(data));
}

numcore::TensorPtr center_crop_tensor(const Observation& obs, int crop_size) {
    Observation c = center_crop(obs, crop_size);
    std::vector<float> data(static_cast<size_t>(c.numel()));
    c.write(data.data());
    return numcore::Tensor::create({1, c.frame_stack() * 3, crop_size, crop_size}, std::move(data));
}

}  // namespace pad::ssl
