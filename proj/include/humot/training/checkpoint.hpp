#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "humot/io/binary.hpp"
#include "humot/model/autoencoder.hpp"
#include "humot/training/adam.hpp"
#include "humot/training/config.hpp"

namespace humot {

// Checkpoint layout (little-endian):
//   "HMCP"  u32 version  u64 file size
//   string  JSON header {model, train, step, optimizer, adam_updates}
//   u32     tensor count
//   per tensor: string name, u32 rows, u32 cols, rows*cols float32
//   if optimizer: first moments then second moments, float32, same shapes
//   u32     CRC-32 of all preceding bytes
// Strings are a u32 byte length followed by the bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  ModelConfig model;
  TrainConfig train;
  std::int64_t step = 0;
  bool has_optimizer = false;
  std::int64_t adam_updates = 0;
};

namespace detail {

template <typename T>
void put_tensor_data(io::Writer& w, const nn::Matrix<T>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) w.put(static_cast<float>(m.data()[i]));
}

template <typename T>
void get_tensor_data(io::Reader& r, nn::Matrix<T>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(r.get<float>());
}

inline CheckpointHeader read_header(io::Reader& r) {
  r.expect_magic("HMCP");
  r.expect_version(kCheckpointVersion);
  r.expect_total_size(r.get<std::uint64_t>());
  r.verify_trailing_crc();
  CheckpointHeader h;
  try {
    const auto j = nlohmann::json::parse(r.get_string());
    h.model = j.at("model").get<ModelConfig>();
    h.train = j.at("train").get<TrainConfig>();
    h.step = j.at("step").get<std::int64_t>();
    h.has_optimizer = j.at("optimizer").get<bool>();
    h.adam_updates = j.at("adam_updates").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    r.fail(FileErrorCode::kMalformed, std::string("header: ") + e.what());
  }
  return h;
}

}  // namespace detail

/// Writes parameters (and optionally optimizer moments) as float32.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const MotionAutoencoder<T>& model, const TrainConfig& train,
                     std::int64_t step, const AdamState<T>* opt = nullptr) {
  const auto& params = model.parameters();
  if (opt && (static_cast<int>(opt->m.size()) != params.size() || opt->v.size() != opt->m.size()))
    throw ModelError("checkpoint: optimizer state does not match the parameter set");
  nlohmann::json header{{"model", model.config()},
                        {"train", train},
                        {"step", step},
                        {"optimizer", opt != nullptr},
                        {"adam_updates", opt ? opt->updates : 0}};
  io::Writer w;
  w.put_magic("HMCP");
  w.put(kCheckpointVersion);
  w.put(std::uint64_t{0});  // patched below
  w.put_string(header.dump());
  w.put(static_cast<std::uint32_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) {
    const auto& v = params[i].value;
    w.put_string(params.name(i));
    w.put(static_cast<std::uint32_t>(v.rows()));
    w.put(static_cast<std::uint32_t>(v.cols()));
    detail::put_tensor_data(w, v);
  }
  if (opt) {
    for (const auto& m : opt->m) detail::put_tensor_data(w, m);
    for (const auto& v : opt->v) detail::put_tensor_data(w, v);
  }
  std::vector<std::uint8_t> bytes = w.bytes();
  const std::uint64_t total = bytes.size() + 4;
  std::memcpy(bytes.data() + 8, &total, sizeof total);
  io::Writer out;
  out.put_bytes(bytes.data(), bytes.size());
  out.put_crc();
  out.save(path);
}

inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  auto r = io::Reader::open(path);
  return detail::read_header(r);
}

/// Restores parameters into `model`, whose configuration must equal the
/// stored one. Optimizer moments are restored when `opt` is given and the
/// file has them.
template <typename T>
CheckpointHeader load_checkpoint(const std::filesystem::path& path, MotionAutoencoder<T>& model,
                                 AdamState<T>* opt = nullptr) {
  auto r = io::Reader::open(path);
  const CheckpointHeader h = detail::read_header(r);
  if (!(h.model == model.config()))
    r.fail(FileErrorCode::kConfigMismatch, "stored model config differs from the requested one");
  auto& params = model.parameters();
  const auto count = r.get<std::uint32_t>();
  if (static_cast<int>(count) != params.size())
    r.fail(FileErrorCode::kConfigMismatch, "tensor count " + std::to_string(count) + ", model has " +
                                               std::to_string(params.size()));
  std::vector<nn::Matrix<T>> values;
  values.reserve(count);
  for (int i = 0; i < params.size(); ++i) {
    const std::string name = r.get_string(4096);
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (name != params.name(i) || rows != params[i].value.rows() || cols != params[i].value.cols())
      r.fail(FileErrorCode::kConfigMismatch, "tensor '" + name + "' does not match parameter '" + params.name(i) + "'");
    nn::Matrix<T> v(rows, cols);
    detail::get_tensor_data(r, v);
    values.push_back(std::move(v));
  }
  AdamState<T> state;
  if (h.has_optimizer) {
    for (auto* moments : {&state.m, &state.v})
      for (int i = 0; i < params.size(); ++i) {
        nn::Matrix<T> m(params[i].value.rows(), params[i].value.cols());
        detail::get_tensor_data(r, m);
        moments->push_back(std::move(m));
      }
    state.updates = h.adam_updates;
  }
  r.expect_end();
  for (int i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
  if (opt) *opt = h.has_optimizer ? std::move(state) : AdamState<T>::zeros(params);
  return h;
}

}  // namespace humot
