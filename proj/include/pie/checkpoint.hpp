#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "pie/scoring.hpp"
#include "pie/typing_network.hpp"

namespace pie {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace detail {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot write checkpoint: " + path);
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename Scalar>
  void put_matrix_f32(const RowMatrix<Scalar>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        put(static_cast<float>(m(i, j)));
      }
    }
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open checkpoint: " + path);
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw std::runtime_error("truncated checkpoint: " + path_);
    return v;
  }
  template <typename Scalar>
  void get_matrix_f32(RowMatrix<Scalar>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = static_cast<Scalar>(get<float>());
      }
    }
  }
  void expect_magic(const char (&magic)[5]) {
    char buf[4];
    in_.read(buf, 4);
    if (!in_ || std::memcmp(buf, magic, 4) != 0) {
      throw std::runtime_error("bad magic in checkpoint: " + path_);
    }
  }
  void expect_eof() {
    in_.peek();
    if (!in_.eof()) {
      throw std::runtime_error("trailing bytes in checkpoint: " + path_);
    }
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace detail

inline constexpr std::uint32_t kKgeCheckpointVersion = 1;
inline constexpr std::uint32_t kTypingCheckpointVersion = 1;

// "PIEK": version, kind u8, table variant u8, |E| u64, |R| u64, d u32,
// r u32, gamma f64, then row-major float32 arrays: Z (or Z_d then W),
// relation parameters.
template <typename Scalar>
void save_checkpoint(const ScoringModel<Scalar>& m, const std::string& path) {
  detail::BinWriter w(path);
  w.put('P'); w.put('I'); w.put('E'); w.put('K');
  w.put<std::uint32_t>(kKgeCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.kind));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.entities.kind()));
  w.put<std::uint64_t>(m.entities.entity_count());
  w.put<std::uint64_t>(m.relation_count());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.entities.rank()));
  w.put<double>(m.gamma);
  w.put_matrix_f32(m.entities.rows());
  if (m.entities.low_rank_kind()) w.put_matrix_f32(m.entities.mix());
  w.put_matrix_f32(m.relations);
  w.close();
}

template <typename Scalar>
ScoringModel<Scalar> load_checkpoint(const std::string& path,
                                     TransENorm norm = TransENorm::kL1) {
  detail::BinReader r(path);
  r.expect_magic("PIEK");
  const auto version = r.get<std::uint32_t>();
  if (version != kKgeCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  }
  const auto kind_raw = r.get<std::uint8_t>();
  if (kind_raw > static_cast<std::uint8_t>(ModelKind::kRotatE)) {
    throw std::runtime_error("unknown model kind in checkpoint: " + path);
  }
  const auto kind = static_cast<ModelKind>(kind_raw);
  const auto variant_raw = r.get<std::uint8_t>();
  if (variant_raw > 1) {
    throw std::runtime_error("unknown table variant in checkpoint: " + path);
  }
  const auto entity_count = r.get<std::uint64_t>();
  const auto rel_count = r.get<std::uint64_t>();
  const auto d = r.get<std::uint32_t>();
  const auto rank = r.get<std::uint32_t>();
  const auto gamma = r.get<double>();

  EmbeddingTable<Scalar> table =
      variant_raw == 0
          ? EmbeddingTable<Scalar>::full(entity_count, d)
          : EmbeddingTable<Scalar>::low_rank(entity_count, rank, d,
                                             /*identity_override=*/rank >= d);
  r.get_matrix_f32(table.rows());
  if (variant_raw == 1) r.get_matrix_f32(table.mix());
  ScoringModel<Scalar> m =
      make_scoring_model(kind, std::move(table), rel_count, gamma, norm);
  r.get_matrix_f32(m.relations);
  r.expect_eof();
  return m;
}

// "PIET": version, K u32, |R| u32, h_edge u32, h_node u32, then float32
// arrays in declaration order: edge embedding, (W_i, b_i) for each of the
// K-1 transforms, output projection, output bias.
template <typename Scalar>
void save_typing_checkpoint(const TypingNetwork<Scalar>& net,
                            const std::string& path) {
  detail::BinWriter w(path);
  w.put('P'); w.put('I'); w.put('E'); w.put('T');
  w.put<std::uint32_t>(kTypingCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layer_count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.relation_count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.hidden));  // h_edge
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.hidden));  // h_node
  w.put_matrix_f32(net.edge_embedding);
  for (std::size_t i = 0; i + 1 < net.layer_count; ++i) {
    w.put_matrix_f32(net.transforms[i]);
    w.put_matrix_f32(net.biases[i]);
  }
  w.put_matrix_f32(net.out_proj);
  w.put_matrix_f32(net.out_bias);
  w.close();
}

template <typename Scalar>
TypingNetwork<Scalar> load_typing_checkpoint(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic("PIET");
  const auto version = r.get<std::uint32_t>();
  if (version != kTypingCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  }
  const auto layer_count = r.get<std::uint32_t>();
  const auto rel_count = r.get<std::uint32_t>();
  const auto h_edge = r.get<std::uint32_t>();
  const auto h_node = r.get<std::uint32_t>();
  TypingNetwork<Scalar> net =
      make_typing_network<Scalar>(layer_count, rel_count, h_edge, h_node);
  r.get_matrix_f32(net.edge_embedding);
  for (std::size_t i = 0; i + 1 < net.layer_count; ++i) {
    r.get_matrix_f32(net.transforms[i]);
    r.get_matrix_f32(net.biases[i]);
  }
  r.get_matrix_f32(net.out_proj);
  r.get_matrix_f32(net.out_bias);
  r.expect_eof();
  return net;
}

}  // namespace pie
