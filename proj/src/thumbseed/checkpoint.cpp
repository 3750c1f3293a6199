// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace thumbseed {
namespace {

constexpr char kMagic[4] = {'T', 'H', 'M', 'B'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(const ParamStore& tensors) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, tensors.size(), 4);
  for (const auto& name : tensors.names()) {
    const Tensor& t = tensors.get(name);
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidArgument("tensor name too long: " + name.substr(0, 32) + "...");
    }
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw InvalidArgument("tensor rank too large for '" + name + "'");
    }
    put_le(out, name.size(), 2);
    out.insert(out.end(), name.begin(), name.end());
    put_le(out, t.rank(), 1);
    for (auto d : t.shape()) put_le(out, d, 4);
    for (float v : t.data()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

ParamStore decode_tensors(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.str(4) != std::string(kMagic, 4)) throw FormatError("checkpoint magic is not THMB");
  const auto count = in.le(4);
  ParamStore out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = in.le(2);
    std::string name = in.str(name_len);
    const auto rank = in.le(1);
    Shape shape;
    for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(in.le(4));
    const std::size_t n = numel(shape);
    if ((bytes.size() - in.pos()) / 4 < n) {
      throw FormatError("checkpoint truncated at byte offset " + std::to_string(in.pos()) +
                        " inside tensor '" + name + "'");
    }
    std::vector<float> data(n);
    for (auto& v : data) v = std::bit_cast<float>(static_cast<std::uint32_t>(in.le(4)));
    try {
      out.add(name, Tensor(std::move(shape), std::move(data)));
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
  }
  if (!in.done()) {
    throw FormatError("checkpoint has trailing bytes at offset " + std::to_string(in.pos()));
  }
  return out;
}

void save_tensors(const std::string& path, const ParamStore& tensors) {
  const auto bytes = encode_tensors(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

ParamStore load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_tensors(bytes);
}

}  // namespace thumbseed
