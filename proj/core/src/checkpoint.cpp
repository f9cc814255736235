#include "ctc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ctc/errors.hpp"
#include "ctc/layers.hpp"
#include "ctc/util.hpp"

namespace ctc {

namespace {

using nlohmann::json;

bool little_endian_host() {
    const std::uint32_t probe = 1;
    return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

void require_little_endian() {
    if (!little_endian_host())
        throw std::runtime_error("checkpoint io requires a little-endian host");
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::uint64_t tensor_checksum(const char* bytes, std::size_t count) {
    return fnv1a64(std::as_bytes(std::span<const char>(bytes, count)));
}

std::size_t align8(std::size_t n) { return (n + 7u) & ~std::size_t{7}; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("checkpoint: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw data_error("checkpoint: read failed for " + path);
    return std::move(buf).str();
}

// Parses and sanity-checks the fixed prefix; returns the header JSON.
json parse_header(const std::string& data, const std::string& path) {
    if (data.size() < 16) throw data_error("checkpoint: truncated file " + path);
    if (std::memcmp(data.data(), kCheckpointMagic, 4) != 0)
        throw data_error("checkpoint: bad magic in " + path);
    const std::uint32_t version = get_u32(data, 4);
    if (version != kCheckpointVersion)
        throw data_error("checkpoint: unsupported version " + std::to_string(version) + " in " +
                         path);
    const std::uint64_t header_len = get_u64(data, 8);
    if (16 + header_len > data.size())
        throw data_error("checkpoint: truncated header in " + path);
    try {
        return json::parse(data.substr(16, header_len));
    } catch (const json::exception& e) {
        throw data_error(std::string("checkpoint: bad header json: ") + e.what());
    }
}

std::uint64_t parse_hex64(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(text, &used, 16);
        if (used != text.size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw data_error(std::string("checkpoint: bad ") + what + " field");
    }
}

}  // namespace

void save_checkpoint(const Model& model, std::uint64_t vocab_digest, const std::string& path) {
    require_little_endian();
    const std::vector<Param> params = model.params();

    std::string payload;
    json manifest = json::array();
    for (const auto& p : params) {
        const auto& values = p.tensor.values();
        const std::size_t bytes = values.size() * sizeof(float);
        const std::size_t offset = align8(payload.size());
        payload.resize(offset, '\0');
        payload.append(reinterpret_cast<const char*>(values.data()), bytes);
        json entry;
        entry["name"] = p.name;
        entry["shape"] = p.tensor.shape();
        entry["offset"] = offset;
        entry["bytes"] = bytes;
        entry["fnv1a64"] = to_hex(tensor_checksum(payload.data() + offset, bytes));
        manifest.push_back(std::move(entry));
    }

    json header;
    header["model_config"] = json::parse(config_to_json(model.config()));
    header["vocab_digest"] = to_hex(vocab_digest);
    header["tensors"] = std::move(manifest);
    const std::string header_text = header.dump();

    std::string out;
    out.append(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u64(out, header_text.size());
    out += header_text;
    out.resize(align8(out.size()), '\0');
    out += payload;

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw data_error("checkpoint: cannot write " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    file.flush();
    if (!file.good()) throw data_error("checkpoint: write failed for " + path);
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    require_little_endian();
    const std::string data = read_file(path);
    const json header = parse_header(data, path);
    CheckpointMeta meta;
    meta.version = get_u32(data, 4);
    try {
        meta.model_config_json = header.at("model_config").dump();
        meta.vocab_digest = parse_hex64(header.at("vocab_digest").get<std::string>(),
                                        "vocab_digest");
        meta.tensor_count = header.at("tensors").size();
    } catch (const json::exception& e) {
        throw data_error(std::string("checkpoint: bad header json: ") + e.what());
    }
    return meta;
}

Model load_checkpoint(const std::string& path, std::uint64_t expected_vocab_digest) {
    require_little_endian();
    const std::string data = read_file(path);
    const json header = parse_header(data, path);

    std::string config_json;
    std::uint64_t digest = 0;
    json tensors;
    try {
        config_json = header.at("model_config").dump();
        digest = parse_hex64(header.at("vocab_digest").get<std::string>(), "vocab_digest");
        tensors = header.at("tensors");
        if (!tensors.is_array()) throw data_error("checkpoint: tensor manifest is not a list");
    } catch (const json::exception& e) {
        throw data_error(std::string("checkpoint: bad header json: ") + e.what());
    }
    if (digest != expected_vocab_digest)
        throw data_error("checkpoint: vocab digest mismatch (file " + to_hex(digest) +
                         ", expected " + to_hex(expected_vocab_digest) + ")");

    Model model(config_from_json(config_json));
    std::vector<Param> params = model.params();
    if (tensors.size() != params.size())
        throw data_error("checkpoint: manifest lists " + std::to_string(tensors.size()) +
                         " tensors, model has " + std::to_string(params.size()));

    const std::size_t payload_base = align8(16 + get_u64(data, 8));
    for (auto& p : params) {
        const json* entry = nullptr;
        for (const auto& candidate : tensors)
            if (candidate.value("name", "") == p.name) {
                entry = &candidate;
                break;
            }
        if (!entry) throw data_error("checkpoint: missing tensor " + p.name);
        std::vector<Extent> shape;
        std::size_t offset = 0, bytes = 0;
        std::uint64_t checksum = 0;
        try {
            shape = entry->at("shape").get<std::vector<Extent>>();
            offset = entry->at("offset").get<std::size_t>();
            bytes = entry->at("bytes").get<std::size_t>();
            checksum = parse_hex64(entry->at("fnv1a64").get<std::string>(), "fnv1a64");
        } catch (const json::exception& e) {
            throw data_error(std::string("checkpoint: bad manifest entry: ") + e.what());
        }
        if (shape != p.tensor.shape())
            throw data_error("checkpoint: shape mismatch for " + p.name);
        auto tensor = p.tensor;
        auto& values = tensor.values();
        if (bytes != values.size() * sizeof(float))
            throw data_error("checkpoint: byte count mismatch for " + p.name);
        const std::size_t abs = payload_base + offset;
        if (abs + bytes > data.size())
            throw data_error("checkpoint: truncated payload for " + p.name);
        if (tensor_checksum(data.data() + abs, bytes) != checksum)
            throw data_error("checkpoint: checksum mismatch for " + p.name);
        std::memcpy(values.data(), data.data() + abs, bytes);
    }
    return model;
}

}  // namespace ctc
