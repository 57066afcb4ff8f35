#include "msse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace msse {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'S', 'E'};

template <class T>
void write_raw(std::ofstream &out, T value) {
    // assumes a little-endian host
    out.write(reinterpret_cast<const char *>(&value), sizeof value);
}

template <class T>
T read_raw(std::ifstream &in, const std::string &path) {
    T value{};
    in.read(reinterpret_cast<char *>(&value), sizeof value);
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
    return value;
}

std::string dims_str(const std::vector<std::uint32_t> &dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i)
        s += (i ? "," : "") + std::to_string(dims[i]);
    return s + ")";
}

} // namespace

const CheckpointTensor *Checkpoint::find(const std::string &name) const {
    for (const auto &[n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

std::string Checkpoint::config_echo() const {
    const CheckpointTensor *t = find("__config__");
    if (!t || t->dtype != 1) return "";
    return {t->bytes.begin(), t->bytes.end()};
}

void Checkpoint::apply(ParamStore<float> &store, const std::string &prefix) const {
    for (auto &p : store) {
        const std::string base = prefix + "." + p.name;
        const char *suffixes[3] = {"", ".m", ".v"};
        std::vector<float> *targets[3] = {&p.value, &p.adam_m, &p.adam_v};
        for (int s = 0; s < 3; ++s) {
            const std::string name = base + suffixes[s];
            const CheckpointTensor *t = find(name);
            if (!t) throw std::runtime_error("checkpoint: missing tensor " + name);
            if (t->dtype != 0)
                throw std::runtime_error("checkpoint: tensor " + name + " is not f32");
            std::vector<std::uint32_t> want(p.dims.begin(), p.dims.end());
            if (t->dims != want)
                throw std::runtime_error("checkpoint: tensor " + name + " has shape " +
                                         dims_str(t->dims) + ", model expects " + dims_str(want));
            *targets[s] = t->f32;
        }
    }
}

void checkpoint_add_store(Checkpoint &ckpt, const ParamStore<float> &store,
                          const std::string &prefix) {
    for (const auto &p : store) {
        CheckpointTensor value;
        value.dims.assign(p.dims.begin(), p.dims.end());
        value.f32 = p.value;
        ckpt.tensors.emplace_back(prefix + "." + p.name, value);
        value.f32 = p.adam_m;
        ckpt.tensors.emplace_back(prefix + "." + p.name + ".m", value);
        value.f32 = p.adam_v;
        ckpt.tensors.emplace_back(prefix + "." + p.name + ".v", std::move(value));
    }
}

void checkpoint_set_config(Checkpoint &ckpt, const std::string &config_json) {
    CheckpointTensor t;
    t.dtype = 1;
    t.dims = {static_cast<std::uint32_t>(config_json.size())};
    t.bytes.assign(config_json.begin(), config_json.end());
    ckpt.tensors.emplace_back("__config__", std::move(t));
}

void save_checkpoint(const Checkpoint &ckpt, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, 4);
    write_raw<std::uint32_t>(out, kCheckpointVersion);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto &[name, t] : ckpt.tensors) {
        write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_raw<std::uint8_t>(out, t.dtype);
        write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
        for (std::uint32_t d : t.dims) write_raw<std::uint32_t>(out, d);
        if (t.dtype == 0)
            out.write(reinterpret_cast<const char *>(t.f32.data()),
                      static_cast<std::streamsize>(t.f32.size() * sizeof(float)));
        else
            out.write(reinterpret_cast<const char *>(t.bytes.data()),
                      static_cast<std::streamsize>(t.bytes.size()));
    }
    write_raw<std::uint64_t>(out, ckpt.step);
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: " + path + " has no MSSE magic");
    const auto version = read_raw<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: " + path + " has version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
    const auto count = read_raw<std::uint32_t>(in, path);
    Checkpoint ckpt;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_raw<std::uint16_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
        CheckpointTensor t;
        t.dtype = read_raw<std::uint8_t>(in, path);
        const auto rank = read_raw<std::uint8_t>(in, path);
        std::uint64_t total = 1;
        for (int d = 0; d < rank; ++d) {
            t.dims.push_back(read_raw<std::uint32_t>(in, path));
            total *= t.dims.back();
        }
        if (t.dtype == 0) {
            t.f32.resize(total);
            in.read(reinterpret_cast<char *>(t.f32.data()),
                    static_cast<std::streamsize>(total * sizeof(float)));
        } else if (t.dtype == 1) {
            t.bytes.resize(total);
            in.read(reinterpret_cast<char *>(t.bytes.data()),
                    static_cast<std::streamsize>(total));
        } else {
            throw std::runtime_error("checkpoint: tensor " + name + " has unknown dtype tag " +
                                     std::to_string(t.dtype));
        }
        if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
        ckpt.tensors.emplace_back(std::move(name), std::move(t));
    }
    ckpt.step = read_raw<std::uint64_t>(in, path);
    return ckpt;
}

} // namespace msse
