#pragma once

#include <fstream>
#include <string>
#include <variant>

#include "fdridge/baselines.hpp"
#include "fdridge/fd_sketch.hpp"
#include "fdridge/matrix_io.hpp"

// Sketch serialization "FDSK", little-endian:
//   magic "FDSK", u32 version=1, u8 kind, u64 ell, u64 d, u64 n_seen,
//   f64 alpha, then a kind-specific payload:
//     kind 0/1/2 (fd/rfd/isvd): sigma[l], v_rows[l*d] row-major, c[d]
//     kind 3 (twolevel): u64 k, u64 seed, u64 rng_counter, f64 w_total,
//                        sigma[3k], v_rows[3k*d], c[d], q_dirs[(l-3k)*d]
//     kind 4/5 (rp/cs):  u64 seed, u64 rng_counter, C[l*d], c_proj[l]
// A sketch must be flushed (empty pending buffer) before serialization.

namespace fdridge {

namespace detail {

inline void fdsk_header(std::ostream& os, SketchKind kind, Index ell, Index d,
                        Index n_seen, double alpha) {
  os.write("FDSK", 4);
  put_u32(os, 1u);
  const unsigned char k = static_cast<unsigned char>(kind);
  os.write(reinterpret_cast<const char*>(&k), 1);
  put_u64(os, static_cast<std::uint64_t>(ell));
  put_u64(os, static_cast<std::uint64_t>(d));
  put_u64(os, static_cast<std::uint64_t>(n_seen));
  put_f64(os, alpha);
}

struct FdskHeader {
  SketchKind kind;
  Index ell, d, n_seen;
  double alpha;
};

inline FdskHeader fdsk_read_header(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FDSK", 4) != 0)
    throw std::invalid_argument("read_fdsk: bad magic");
  if (get_u32(is) != 1u)
    throw std::invalid_argument("read_fdsk: unsupported version");
  unsigned char k = 0;
  is.read(reinterpret_cast<char*>(&k), 1);
  if (k > 5) throw std::invalid_argument("read_fdsk: unknown kind");
  FdskHeader h;
  h.kind = static_cast<SketchKind>(k);
  h.ell = static_cast<Index>(get_u64(is));
  h.d = static_cast<Index>(get_u64(is));
  h.n_seen = static_cast<Index>(get_u64(is));
  h.alpha = get_f64(is);
  if (!is) throw std::invalid_argument("read_fdsk: truncated header");
  return h;
}

inline void put_dense(std::ostream& os, const Eigen::Ref<const Matrix>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(os, m(i, j));
}

inline Matrix get_dense(std::istream& is, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = get_f64(is);
  if (!is) throw std::invalid_argument("read_fdsk: truncated payload");
  return m;
}

}  // namespace detail

inline void write_fdsk(std::ostream& os, const FdSketch& s) {
  if (s.pending_rows() != 0)
    throw std::logic_error("write_fdsk: flush the sketch first");
  detail::fdsk_header(os, s.kind(), s.ell(), s.dim(), s.n_seen(), s.alpha());
  detail::put_dense(os, Matrix(s.sigma()));
  detail::put_dense(os, s.v_rows());
  detail::put_dense(os, Matrix(s.c()));
  if (!os) throw std::invalid_argument("write_fdsk: stream write failed");
}

inline void write_fdsk(std::ostream& os, const TwoLevelSketch& s) {
  if (s.pending_rows() != 0)
    throw std::logic_error("write_fdsk: flush the sketch first");
  const Index ell = 3 * s.k() + s.q_cap();
  detail::fdsk_header(os, SketchKind::twolevel, ell, s.dim(),
                      s.n_seen(), s.b_sketch().alpha());
  detail::put_u64(os, static_cast<std::uint64_t>(s.k()));
  detail::put_u64(os, s.seed());
  detail::put_u64(os, s.rng_counter());
  detail::put_f64(os, s.w_total());
  detail::put_dense(os, Matrix(s.b_sketch().sigma()));
  detail::put_dense(os, s.b_sketch().v_rows());
  detail::put_dense(os, Matrix(s.c()));
  detail::put_dense(os, s.q_dirs());
  if (!os) throw std::invalid_argument("write_fdsk: stream write failed");
}

inline void write_fdsk(std::ostream& os, const RpSketch& s) {
  if (s.pending_rows() != 0)
    throw std::logic_error("write_fdsk: flush the sketch first");
  detail::fdsk_header(os, s.kind(), s.ell(), s.dim(), s.n_seen(), 0.0);
  detail::put_u64(os, s.seed());
  detail::put_u64(os, s.rng_counter());
  detail::put_dense(os, s.projected());
  detail::put_dense(os, Matrix(s.projected_labels()));
  if (!os) throw std::invalid_argument("write_fdsk: stream write failed");
}

using AnySketch = std::variant<FdSketch, TwoLevelSketch, RpSketch, CsSketch>;

inline AnySketch read_fdsk(std::istream& is) {
  const detail::FdskHeader h = detail::fdsk_read_header(is);
  switch (h.kind) {
    case SketchKind::fd:
    case SketchKind::rfd:
    case SketchKind::isvd: {
      Vector sigma = detail::get_dense(is, h.ell, 1);
      Matrix v_rows = detail::get_dense(is, h.ell, h.d);
      Vector c = detail::get_dense(is, h.d, 1);
      return FdSketch::from_parts(h.ell, h.d, h.kind, h.n_seen, h.alpha,
                                  std::move(sigma), std::move(v_rows),
                                  std::move(c));
    }
    case SketchKind::twolevel: {
      const Index k = static_cast<Index>(detail::get_u64(is));
      const std::uint64_t seed = detail::get_u64(is);
      const std::uint64_t counter = detail::get_u64(is);
      const double w_total = detail::get_f64(is);
      if (!is || k < 1 || 3 * k >= h.ell)
        throw std::invalid_argument("read_fdsk: bad twolevel header");
      Vector sigma = detail::get_dense(is, 3 * k, 1);
      Matrix v_rows = detail::get_dense(is, 3 * k, h.d);
      Vector c = detail::get_dense(is, h.d, 1);
      Matrix q_dirs = detail::get_dense(is, h.ell - 3 * k, h.d);
      FdSketch b = FdSketch::from_parts(3 * k, h.d, SketchKind::fd, h.n_seen,
                                        h.alpha, std::move(sigma),
                                        std::move(v_rows), std::move(c));
      return TwoLevelSketch::from_parts(h.ell, h.d, seed, k, std::move(b),
                                        w_total, counter, std::move(q_dirs));
    }
    case SketchKind::rp:
    case SketchKind::cs: {
      const std::uint64_t seed = detail::get_u64(is);
      const std::uint64_t counter = detail::get_u64(is);
      Matrix c_mat = detail::get_dense(is, h.ell, h.d);
      Vector c_proj = detail::get_dense(is, h.ell, 1);
      if (h.kind == SketchKind::rp)
        return RpSketch::from_parts(h.ell, h.d, seed, counter, h.n_seen,
                                    std::move(c_mat), std::move(c_proj));
      return CsSketch::from_parts(h.ell, h.d, seed, counter, h.n_seen,
                                  std::move(c_mat), std::move(c_proj));
    }
  }
  throw std::invalid_argument("read_fdsk: unknown kind");
}

inline void write_fdsk_file(const std::string& path, const auto& sketch) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::invalid_argument("write_fdsk: cannot open " + path);
  write_fdsk(os, sketch);
}

inline AnySketch read_fdsk_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("read_fdsk: cannot open " + path);
  return read_fdsk(is);
}

}  // namespace fdridge
