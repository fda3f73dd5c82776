// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "cirrange/binary_io.hpp"
#include "cirrange/errors.hpp"

namespace cirrange::nn {
namespace {

namespace bio = cirrange::binary_io;

enum class Tag : std::uint8_t { Conv2d = 1, MaxPool = 2, Flatten = 3, Dense = 4, Relu = 5 };

void write_shape(std::ostream& os, const Shape& shape) {
    bio::write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) bio::write_u64(os, d);
}

Shape read_shape(std::istream& is) {
    const auto rank = bio::read_u32(is);
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = bio::read_u64(is);
    return shape;
}

void write_payload(std::ostream& os, const Tensor& t) {
    for (double v : t.data()) bio::write_f64(os, v);
}

void read_payload(std::istream& is, Tensor& t) {
    for (double& v : t.data()) v = bio::read_f64(is);
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_shape(os, t.shape());
    write_payload(os, t);
}

Tensor read_tensor(std::istream& is) {
    Shape shape = read_shape(is);
    if (shape_size(shape) > (std::size_t{1} << 32)) throw FormatError("checkpoint: tensor too large");
    Tensor t(std::move(shape));
    read_payload(is, t);
    return t;
}

}  // namespace

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    const Model& model = ckpt.model;
    bio::write_bytes(os, "CIRM");
    bio::write_u16(os, kCheckpointVersion);
    bio::write_u32(os, static_cast<std::uint32_t>(model.layers().size()));
    write_shape(os, model.input_shape());
    for (const auto& layer : model.layers()) {
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            bio::write_u8(os, static_cast<std::uint8_t>(Tag::Conv2d));
            bio::write_u32(os, 2);
            write_tensor(os, c->weights);
            write_tensor(os, c->bias);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            bio::write_u8(os, static_cast<std::uint8_t>(Tag::Dense));
            bio::write_u32(os, 2);
            write_tensor(os, d->weights);
            write_tensor(os, d->bias);
        } else {
            Tag tag = std::holds_alternative<MaxPool2>(layer) ? Tag::MaxPool
                      : std::holds_alternative<Flatten>(layer) ? Tag::Flatten
                                                                : Tag::Relu;
            bio::write_u8(os, static_cast<std::uint8_t>(tag));
            bio::write_u32(os, 0);
        }
    }
    bio::write_u8(os, ckpt.optimizer ? 1 : 0);
    if (ckpt.optimizer) {
        const auto& opt = *ckpt.optimizer;
        bio::write_f64(os, opt.hyper.lr);
        bio::write_f64(os, opt.hyper.beta1);
        bio::write_f64(os, opt.hyper.beta2);
        bio::write_f64(os, opt.hyper.eps);
        bio::write_u64(os, opt.state.t);
        const auto params = model.parameters();
        if (opt.state.m.size() != params.size() || opt.state.v.size() != params.size()) {
            throw ArgumentError("checkpoint: optimizer state does not match model parameters");
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            write_payload(os, opt.state.m[i]);
            write_payload(os, opt.state.v[i]);
        }
    }
    bio::write_u32(os, static_cast<std::uint32_t>(ckpt.attributes.size()));
    for (const auto& [key, value] : ckpt.attributes) {
        bio::write_u16(os, static_cast<std::uint16_t>(key.size()));
        bio::write_bytes(os, key);
        bio::write_f64(os, value);
    }
    if (!os) throw FormatError("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& is) {
    if (bio::read_bytes(is, 4) != "CIRM") throw FormatError("checkpoint: bad magic (expected CIRM)");
    const auto version = bio::read_u16(is);
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto n_layers = bio::read_u32(is);
    Shape input_shape = read_shape(is);
    std::vector<Layer> layers;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const auto tag = static_cast<Tag>(bio::read_u8(is));
        const auto n_tensors = bio::read_u32(is);
        const std::uint32_t expected = (tag == Tag::Conv2d || tag == Tag::Dense) ? 2 : 0;
        if (n_tensors != expected) {
            throw FormatError("checkpoint: layer " + std::to_string(i) + " has " + std::to_string(n_tensors) +
                              " tensors, expected " + std::to_string(expected));
        }
        switch (tag) {
            case Tag::Conv2d: {
                Tensor w = read_tensor(is);
                Tensor b = read_tensor(is);
                layers.emplace_back(Conv2d{std::move(w), std::move(b)});
                break;
            }
            case Tag::Dense: {
                Tensor w = read_tensor(is);
                Tensor b = read_tensor(is);
                layers.emplace_back(Dense{std::move(w), std::move(b)});
                break;
            }
            case Tag::MaxPool: layers.emplace_back(MaxPool2{}); break;
            case Tag::Flatten: layers.emplace_back(Flatten{}); break;
            case Tag::Relu: layers.emplace_back(Relu{}); break;
            default:
                throw FormatError("checkpoint: unknown layer tag " + std::to_string(static_cast<int>(tag)));
        }
    }
    Checkpoint ckpt{Model(std::move(input_shape), std::move(layers)), std::nullopt, {}};
    if (bio::read_u8(is) != 0) {
        OptimizerSnapshot opt;
        opt.hyper.lr = bio::read_f64(is);
        opt.hyper.beta1 = bio::read_f64(is);
        opt.hyper.beta2 = bio::read_f64(is);
        opt.hyper.eps = bio::read_f64(is);
        opt.state = AdamState::zeros_like(ckpt.model);
        opt.state.t = bio::read_u64(is);
        for (std::size_t i = 0; i < opt.state.m.size(); ++i) {
            read_payload(is, opt.state.m[i]);
            read_payload(is, opt.state.v[i]);
        }
        ckpt.optimizer = std::move(opt);
    }
    const auto n_attr = bio::read_u32(is);
    for (std::uint32_t i = 0; i < n_attr; ++i) {
        const auto len = bio::read_u16(is);
        std::string key = bio::read_bytes(is, len);
        ckpt.attributes[std::move(key)] = bio::read_f64(is);
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    save_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint " + path.string());
    return load_checkpoint(is);
}

}  // namespace cirrange::nn
