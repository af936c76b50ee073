#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "molrel/tensor/params.hpp"

namespace molrel {

// Checkpoint layout: 8-byte magic, u64 manifest length (little endian), JSON
// manifest, then raw little-endian float32 arrays in row-major order at the
// offsets the manifest declares. Format version "1".
inline constexpr char kCheckpointMagic[8] = {'M', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

namespace detail {
inline const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::matrix: return "matrix";
    case ParamKind::bias: return "bias";
    case ParamKind::norm: return "norm";
  }
  return "matrix";
}
inline ParamKind param_kind_from(const std::string& s) {
  if (s == "matrix") return ParamKind::matrix;
  if (s == "bias") return ParamKind::bias;
  if (s == "norm") return ParamKind::norm;
  fail_validation("checkpoint: unknown parameter kind '", s, "'");
}
}  // namespace detail

template <typename S>
void save_checkpoint(const ParamStore<S>& store, const std::string& path) {
  nlohmann::json manifest;
  manifest["format_version"] = "1";
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& e : store.entries()) {
    nlohmann::json t;
    t["name"] = e.name;
    t["rows"] = e.value.rows();
    t["cols"] = e.value.cols();
    t["offset"] = offset;
    t["kind"] = detail::param_kind_name(e.kind);
    t["trainable"] = e.trainable;
    tensors.push_back(std::move(t));
    offset += static_cast<uint64_t>(e.value.size()) * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);
  std::string mstr = manifest.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) fail_runtime("checkpoint: cannot open '", path, "' for writing");
  f.write(kCheckpointMagic, 8);
  uint64_t mlen = mstr.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((mlen >> (8 * i)) & 0xff);
  f.write(lenbuf, 8);
  f.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  for (const auto& e : store.entries()) {
    MatX<float> m = e.value.template cast<float>();
    f.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(m.size())));
  }
  if (!f) fail_runtime("checkpoint: write to '", path, "' failed");
}

// Loads into a fresh store; entry order follows the manifest.
template <typename S>
ParamStore<S> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_runtime("checkpoint: cannot open '", path, "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    fail_validation("checkpoint: '", path, "' is not a checkpoint file");
  char lenbuf[8];
  f.read(lenbuf, 8);
  uint64_t mlen = 0;
  for (int i = 0; i < 8; ++i)
    mlen |= static_cast<uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
  std::string mstr(mlen, '\0');
  f.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!f) fail_validation("checkpoint: truncated manifest in '", path, "'");
  nlohmann::json manifest = nlohmann::json::parse(mstr, nullptr, false);
  if (manifest.is_discarded()) fail_validation("checkpoint: corrupt manifest in '", path, "'");
  if (manifest.value("format_version", "") != "1")
    fail_validation("checkpoint: unsupported format version '",
                    manifest.value("format_version", "?"), "'");

  const std::streampos payload_start = f.tellg();
  ParamStore<S> store;
  for (const auto& t : manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const Index rows = t.at("rows").get<Index>();
    const Index cols = t.at("cols").get<Index>();
    const uint64_t offset = t.at("offset").get<uint64_t>();
    MatX<float> m(rows, cols);
    f.seekg(payload_start + static_cast<std::streamoff>(offset));
    f.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(m.size())));
    if (!f) fail_validation("checkpoint: truncated payload for '", name, "'");
    store.create(name, m.template cast<S>(),
                 detail::param_kind_from(t.at("kind").get<std::string>()));
    store.at(name).trainable = t.value("trainable", true);
  }
  return store;
}

}  // namespace molrel
