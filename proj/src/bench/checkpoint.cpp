#include "pad/bench/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "pad/errors.hpp"

namespace pad::bench {

namespace {

constexpr uint32_t kFormatVersion = 1;
constexpr char kMagic[4] = {'P', 'A', 'D', 'C'};

uint32_t crc_table_entry(uint32_t i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    return c;
}

void append_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_f32(std::string& out, float f) {
    uint32_t v = 0;
    std::memcpy(&v, &f, 4);
    append_u32(out, v);
}

struct Reader {
    const uint8_t* data;
    size_t len;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > len) throw IntegrityError("checkpoint truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = static_cast<uint32_t>(data[pos]) | (static_cast<uint32_t>(data[pos + 1]) << 8) |
                     (static_cast<uint32_t>(data[pos + 2]) << 16) |
                     (static_cast<uint32_t>(data[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32() {
        const uint32_t v = u32();
        float f = 0.0f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

std::string partition_line(const char* name, const policynet::ParamSet& set) {
    std::string line = std::string("partition.") + name + "=";
    bool first = true;
    for (const auto& [n, t] : set.items) {
        if (!first) line += ',';
        line += n;
        first = false;
    }
    return line;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) next = s.size();
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len) {
    static uint32_t table[256];
    static bool init = [] {
        for (uint32_t i = 0; i < 256; ++i) table[i] = crc_table_entry(i);
        return true;
    }();
    (void)init;
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void checkpoint_save(const policynet::PolicyParams& params, const RunConfig& config,
                     const std::string& path) {
    std::string blob;
    blob.append(kMagic, 4);
    append_u32(blob, kFormatVersion);

    std::string snapshot = config.serialize();
    snapshot += partition_line("theta_e", params.theta_e) + "\n";
    snapshot += partition_line("theta_a", params.theta_a) + "\n";
    snapshot += partition_line("theta_s", params.theta_s) + "\n";
    append_u32(blob, static_cast<uint32_t>(snapshot.size()));
    blob += snapshot;

    std::vector<std::pair<std::string, policynet::TensorPtr>> all;
    for (const auto* set : {&params.theta_e, &params.theta_a, &params.theta_s}) {
        for (const auto& item : set->items) all.push_back(item);
    }
    append_u32(blob, static_cast<uint32_t>(all.size()));
    for (const auto& [name, tensor] : all) {
        append_u32(blob, static_cast<uint32_t>(name.size()));
        blob += name;
        append_u32(blob, static_cast<uint32_t>(tensor->shape.size()));
        for (int d : tensor->shape) append_u32(blob, static_cast<uint32_t>(d));
        for (float v : tensor->data) append_f32(blob, v);
    }
    append_u32(blob, crc32(reinterpret_cast<const uint8_t*>(blob.data()), blob.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: '" + path + "'");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing checkpoint: '" + path + "'");
}

LoadedCheckpoint checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string blob = buf.str();
    if (blob.size() < 12) throw IntegrityError("checkpoint too small");

    // CRC covers everything before the trailing checksum.
    const size_t body = blob.size() - 4;
    Reader tail{reinterpret_cast<const uint8_t*>(blob.data()), blob.size(), body};
    const uint32_t stored = tail.u32();
    const uint32_t actual = crc32(reinterpret_cast<const uint8_t*>(blob.data()), body);
    if (stored != actual) throw IntegrityError("checkpoint CRC mismatch");

    Reader r{reinterpret_cast<const uint8_t*>(blob.data()), body, 0};
    if (r.str(4) != std::string(kMagic, 4)) throw IntegrityError("checkpoint magic mismatch");
    const uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw IntegrityError("checkpoint format version " + std::to_string(version) +
                             " unsupported");
    }
    const uint32_t snapshot_len = r.u32();
    const std::string snapshot = r.str(snapshot_len);

    // Partition lines are part of the snapshot but not RunConfig keys.
    std::string config_text;
    std::map<std::string, std::vector<std::string>> partitions;
    {
        std::istringstream lines(snapshot);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("partition.", 0) == 0) {
                const size_t eq = line.find('=');
                partitions[line.substr(10, eq - 10)] = split(line.substr(eq + 1), ',');
            } else {
                config_text += line;
                config_text += '\n';
            }
        }
    }
    LoadedCheckpoint out{policynet::PolicyParams{}, RunConfig::parse(config_text)};

    // Rebuild the network skeleton, then overwrite tensor contents by name.
    out.params = policynet::build(out.config.network_config(), out.config.get_u64("train.seed"));

    const uint32_t count = r.u32();
    std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> loaded;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        const uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        size_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int>(r.u32());
            numel *= static_cast<size_t>(shape[d]);
        }
        std::vector<float> data(numel);
        for (size_t j = 0; j < numel; ++j) data[j] = r.f32();
        loaded[name] = {std::move(shape), std::move(data)};
    }
    if (r.pos != body) throw IntegrityError("checkpoint has trailing bytes");

    auto apply = [&loaded](policynet::ParamSet& set, const std::vector<std::string>& names,
                           const char* which) {
        if (names.size() != set.items.size()) {
            throw IntegrityError(std::string("checkpoint partition ") + which +
                                 " does not match the rebuilt network");
        }
        for (size_t i = 0; i < set.items.size(); ++i) {
            if (set.items[i].first != names[i]) {
                throw IntegrityError("checkpoint partition name mismatch: expected '" +
                                     set.items[i].first + "', found '" + names[i] + "'");
            }
            auto it = loaded.find(names[i]);
            if (it == loaded.end()) throw IntegrityError("checkpoint missing tensor " + names[i]);
            if (it->second.first != set.items[i].second->shape) {
                throw IntegrityError("checkpoint tensor shape mismatch for " + names[i]);
            }
            set.items[i].second->data = it->second.second;
        }
    };
    apply(out.params.theta_e, partitions["theta_e"], "theta_e");
    apply(out.params.theta_a, partitions["theta_a"], "theta_a");
    apply(out.params.theta_s, partitions["theta_s"], "theta_s");
    return out;
}

}  // namespace pad::bench
