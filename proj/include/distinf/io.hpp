/*
 * Copyright 2026 The distinf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distinf/dataset.hpp"
#include "distinf/network.hpp"

namespace distinf {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

namespace detail {

inline std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIOFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteFileBytes(const std::filesystem::path& path,
                           const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIOFailure, "cannot open " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIOFailure, "write failed for " + path.string());
}

inline void AppendLittleEndian(double v, std::string& out) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

inline double ReadLittleEndian(const std::string& bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    bits |= static_cast<std::uint64_t>(
                static_cast<std::uint8_t>(bytes[offset + static_cast<std::size_t>(b)]))
            << (8 * b);
  }
  return std::bit_cast<double>(bits);
}

inline std::uint32_t ReadBigEndian32(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    v = (v << 8) | static_cast<std::uint8_t>(bytes[offset + b]);
  }
  return v;
}

inline void AppendBigEndian32(std::uint32_t v, std::string& out) {
  for (int b = 3; b >= 0; --b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline nlohmann::json ParamEntry(const Tensor& t, std::size_t& offset) {
  nlohmann::json e = {{"shape", t.shape()}, {"offset", offset}, {"length", t.size()}};
  offset += t.size();
  return e;
}

}  // namespace detail

// Writes `dir/manifest.json` and `dir/weights.bin` (little-endian float64,
// parameters concatenated in layer order, weights before bias).
inline void SaveModel(const Network& net, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIOFailure, "cannot create " + dir.string());

  nlohmann::json layers = nlohmann::json::array();
  std::string blob;
  std::size_t offset = 0;
  auto append = [&](const Tensor& t) {
    for (double v : t.values()) detail::AppendLittleEndian(v, blob);
    return detail::ParamEntry(t, offset);
  };
  for (const Layer& layer : net.layers()) {
    nlohmann::json l = {{"kind", LayerName(layer)}};
    if (const auto* d = std::get_if<Dense>(&layer)) {
      l["weights"] = append(d->weights);
      l["bias"] = append(d->bias);
    } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
      l["stride"] = c->stride;
      l["weights"] = append(c->kernels);
      l["bias"] = append(c->bias);
    } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
      l["window"] = p->window;
      l["stride"] = p->stride;
    }
    layers.push_back(std::move(l));
  }
  const nlohmann::json manifest = {{"format_version", kModelFormatVersion},
                                   {"input_shape", net.input_shape()},
                                   {"weights_file", "weights.bin"},
                                   {"weight_count", offset},
                                   {"layers", std::move(layers)}};
  detail::WriteFileBytes(dir / "manifest.json", manifest.dump(2) + "\n");
  detail::WriteFileBytes(dir / "weights.bin", blob);
}

inline Network LoadModel(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::ReadFileBytes(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptManifest, e.what());
  }
  try {
    if (manifest.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::kUnsupportedVersion,
                  "format_version " + manifest.at("format_version").dump());
    }
    const std::string blob = detail::ReadFileBytes(
        dir / manifest.value("weights_file", std::string("weights.bin")));
    const auto count = manifest.at("weight_count").get<std::size_t>();
    if (blob.size() != count * 8) {
      throw Error(ErrorKind::kBlobLengthMismatch,
                  "weights blob holds " + std::to_string(blob.size()) +
                      " bytes, manifest declares " + std::to_string(count) +
                      " doubles");
    }
    std::vector<bool> used(count, false);
    auto tensor = [&](const nlohmann::json& e) {
      const auto shape = e.at("shape").get<Shape>();
      const auto off = e.at("offset").get<std::size_t>();
      const auto len = e.at("length").get<std::size_t>();
      if (len != ShapeSize(shape)) {
        throw Error(ErrorKind::kCorruptManifest, "parameter length disagrees with shape");
      }
      if (off > count || len > count - off) {
        throw Error(ErrorKind::kBlobLengthMismatch, "parameter outside weights blob");
      }
      std::vector<double> data(len);
      for (std::size_t i = 0; i < len; ++i) {
        if (used[off + i]) {
          throw Error(ErrorKind::kCorruptManifest, "overlapping parameter ranges");
        }
        used[off + i] = true;
        data[i] = detail::ReadLittleEndian(blob, (off + i) * 8);
      }
      Tensor t(shape, std::move(data));
      RequireFinite(t, "loaded parameter");
      return t;
    };
    std::vector<Layer> layers;
    for (const auto& l : manifest.at("layers")) {
      const auto kind = l.at("kind").get<std::string>();
      if (kind == "dense") {
        layers.push_back(Dense{tensor(l.at("weights")), tensor(l.at("bias"))});
      } else if (kind == "conv2d") {
        layers.push_back(Conv2D{tensor(l.at("weights")), tensor(l.at("bias")),
                                l.at("stride").get<std::size_t>()});
      } else if (kind == "maxpool2d") {
        layers.push_back(MaxPool2D{l.at("window").get<std::size_t>(),
                                   l.at("stride").get<std::size_t>()});
      } else if (kind == "relu") {
        layers.push_back(ReLU{});
      } else if (kind == "sigmoid") {
        layers.push_back(Sigmoid{});
      } else if (kind == "flatten") {
        layers.push_back(Flatten{});
      } else if (kind == "softmax") {
        layers.push_back(Softmax{});
      } else {
        throw Error(ErrorKind::kCorruptManifest, "unknown layer kind " + kind);
      }
    }
    try {
      return Network(manifest.at("input_shape").get<Shape>(), std::move(layers));
    } catch (const Error& e) {
      throw Error(ErrorKind::kCorruptManifest, e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptManifest, e.what());
  }
}

// Parses an IDX image file (magic 2051, N x H x W bytes) and label file
// (magic 2049, N bytes). Pixels are scaled by 1/255 into 1 x H x W tensors.
inline LabeledDataset LoadIdx(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path,
                              std::string split = "train") {
  const std::string img = detail::ReadFileBytes(images_path);
  const std::string lab = detail::ReadFileBytes(labels_path);
  if (img.size() < 16 || lab.size() < 8) {
    throw Error(ErrorKind::kDimensionMismatch, "IDX header truncated");
  }
  if (detail::ReadBigEndian32(img, 0) != kIdxImageMagic) {
    throw Error(ErrorKind::kBadMagic,
                "image magic " + std::to_string(detail::ReadBigEndian32(img, 0)));
  }
  if (detail::ReadBigEndian32(lab, 0) != kIdxLabelMagic) {
    throw Error(ErrorKind::kBadMagic,
                "label magic " + std::to_string(detail::ReadBigEndian32(lab, 0)));
  }
  const std::size_t n = detail::ReadBigEndian32(img, 4);
  const std::size_t rows = detail::ReadBigEndian32(img, 8);
  const std::size_t cols = detail::ReadBigEndian32(img, 12);
  const std::size_t n_labels = detail::ReadBigEndian32(lab, 4);
  const std::size_t payload = img.size() - 16;
  if (rows == 0 || cols == 0 || rows * cols > payload + 1 ||
      payload != n * rows * cols) {
    throw Error(ErrorKind::kDimensionMismatch,
                "image payload does not match " + std::to_string(n) + "x" +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (lab.size() != 8 + n_labels) {
    throw Error(ErrorKind::kDimensionMismatch, "label payload length mismatch");
  }
  if (n != n_labels) {
    throw Error(ErrorKind::kCountMismatch,
                std::to_string(n) + " images vs " + std::to_string(n_labels) +
                    " labels");
  }
  LabeledDataset ds;
  ds.split = std::move(split);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t({1, rows, cols});
    for (std::size_t p = 0; p < rows * cols; ++p) {
      t[p] = static_cast<std::uint8_t>(img[16 + i * rows * cols + p]) / 255.0;
    }
    ds.instances.push_back(std::move(t));
    ds.labels.push_back(static_cast<std::uint8_t>(lab[8 + i]));
  }
  return ds;
}

// Inverse of LoadIdx for 1 x H x W datasets; pixels are rounded to bytes.
inline void WriteIdx(const LabeledDataset& ds,
                     const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  std::size_t rows = 1, cols = 1;
  if (!ds.empty()) {
    const Shape& s = ds.instances.front().shape();
    if (s.size() != 3 || s[0] != 1) {
      throw Error(ErrorKind::kInvalidChannels, "IDX export needs 1xHxW images");
    }
    rows = s[1];
    cols = s[2];
  }
  std::string img, lab;
  detail::AppendBigEndian32(kIdxImageMagic, img);
  detail::AppendBigEndian32(static_cast<std::uint32_t>(ds.size()), img);
  detail::AppendBigEndian32(static_cast<std::uint32_t>(rows), img);
  detail::AppendBigEndian32(static_cast<std::uint32_t>(cols), img);
  detail::AppendBigEndian32(kIdxLabelMagic, lab);
  detail::AppendBigEndian32(static_cast<std::uint32_t>(ds.size()), lab);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    RequireShape({1, rows, cols}, ds.instances[i].shape(), "IDX image");
    for (double v : ds.instances[i].values()) {
      img.push_back(static_cast<char>(
          static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5))));
    }
    if (ds.labels[i] > 255) {
      throw Error(ErrorKind::kInvalidArgument, "IDX labels must fit in a byte");
    }
    lab.push_back(static_cast<char>(ds.labels[i]));
  }
  detail::WriteFileBytes(images_path, img);
  detail::WriteFileBytes(labels_path, lab);
}

}  // namespace distinf
