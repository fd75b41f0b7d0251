// Copyright 2026 The QSpeckle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qspeckle/checkpoint.hpp"

#include <cstdint>
#include <cstring>

#include "qspeckle/hash.hpp"
#include "qspeckle/io.hpp"
#include "qspeckle/qtnsr.hpp"

namespace qspeckle::checkpoint {

namespace {

nlohmann::json header_json(const denoiser::Checkpoint& c) {
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t l = 0; l < c.model.layers.size(); ++l) {
        params.push_back({{"name", "conv" + std::to_string(l) + ".kernels"}, {"shape", c.model.layers[l].kernels.shape()}});
        params.push_back({{"name", "conv" + std::to_string(l) + ".bias"}, {"shape", c.model.layers[l].bias.shape()}});
    }
    return {{"format", "qspeckle-model/1"},
            {"architecture",
             {{"channels", c.model.arch.channels}, {"kernel", c.model.arch.kernel}, {"activation", "relu"},
              {"residual", "denoised = noisy - cnn(features)"}}},
            {"model_seed", c.model.seed},
            {"circuit", qsim::to_json(c.circuit)},
            {"spec_hash", c.spec_hash},
            {"norm", {{"lo", c.norm.lo}, {"hi", c.norm.hi}}},
            {"loss", denoiser::to_json(c.weights)},
            {"train", denoiser::to_json(c.train_config)},
            {"dataset_id", c.dataset_id},
            {"best_epoch", c.best_epoch},
            {"params", std::move(params)}};
}

} // namespace

std::string encode(const denoiser::Checkpoint& ckpt) {
    ckpt.model.validate();
    const std::string header = header_json(ckpt).dump();
    std::string out(kMagic.begin(), kMagic.end());
    const auto len = static_cast<std::uint64_t>(header.size());
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((len >> (8 * i)) & 0xFFu));
    }
    out += header;
    for (const auto& layer : ckpt.model.layers) {
        out += qtnsr::encode(layer.kernels);
        out += qtnsr::encode(layer.bias);
    }
    return out;
}

denoiser::Checkpoint decode(std::string_view bytes) {
    require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) == 0, ErrorKind::Format,
            "checkpoint: bad magic");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) {
        len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    }
    require(bytes.size() - 16 >= len, ErrorKind::Format, "checkpoint: truncated header");

    denoiser::Checkpoint c;
    std::size_t pos = 16 + len;
    try {
        const auto h = nlohmann::json::parse(bytes.substr(16, len));
        require(h.at("format").get<std::string>() == "qspeckle-model/1", ErrorKind::Format,
                "checkpoint: unsupported format");
        c.model.arch.channels = h.at("architecture").at("channels").get<std::vector<std::size_t>>();
        c.model.arch.kernel = h.at("architecture").at("kernel").get<std::size_t>();
        c.model.seed = h.at("model_seed").get<std::uint64_t>();
        c.circuit = qsim::circuit_from_json(h.at("circuit"));
        c.spec_hash = h.at("spec_hash").get<std::string>();
        c.norm = {h.at("norm").at("lo").get<double>(), h.at("norm").at("hi").get<double>()};
        c.weights = denoiser::loss_weights_from_json(h.at("loss"));
        c.train_config = denoiser::train_config_from_json(h.at("train"));
        c.dataset_id = h.at("dataset_id").get<std::string>();
        c.best_epoch = h.at("best_epoch").get<std::size_t>();
        const auto& params = h.at("params");
        require(params.size() % 2 == 0, ErrorKind::Format, "checkpoint: parameter list must pair kernels and biases");
        for (std::size_t i = 0; i < params.size(); i += 2) {
            denoiser::ConvLayer layer;
            for (Tensor* dst : {&layer.kernels, &layer.bias}) {
                std::size_t used = 0;
                *dst = qtnsr::decode(bytes.substr(pos), &used);
                pos += used;
                const auto& entry = params[i + (dst == &layer.bias ? 1 : 0)];
                require(dst->shape() == entry.at("shape").get<Shape>(), ErrorKind::Format,
                        "checkpoint: blob shape does not match header for " + entry.at("name").get<std::string>());
            }
            c.model.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("checkpoint header: ") + e.what());
    }
    require(pos == bytes.size(), ErrorKind::Format, "checkpoint: trailing bytes");
    c.model.validate();
    require(qsim::spec_hash(c.circuit) == c.spec_hash, ErrorKind::HashMismatch,
            "checkpoint: stored circuit does not match its recorded spec hash");
    return c;
}

void save(const std::filesystem::path& path, const denoiser::Checkpoint& ckpt) {
    io::write_file_atomic(path, encode(ckpt));
}

denoiser::Checkpoint load(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    try {
        return decode(bytes);
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

std::string model_id(const denoiser::Checkpoint& ckpt) {
    return sha256_hex(encode(ckpt));
}

} // namespace qspeckle::checkpoint
