// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/mrpe.hpp"

#include <string>

#include "vdb/ops.hpp"

namespace vdb::mrpe {

std::vector<std::size_t> relative_index_map(std::size_t window) {
  const std::size_t m = window;
  const std::size_t l = m * m;
  const std::size_t side = 2 * m - 1;
  std::vector<std::size_t> map(l * l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      const std::size_t dr = i / m + m - 1 - j / m;
      const std::size_t dc = i % m + m - 1 - j % m;
      map[i * l + j] = dr * side + dc;
    }
  return map;
}

template <class T>
Var<T> add_frame_pe(const Var<T>& x, const Var<T>& table) {
  const Shape& s = x.shape();
  if (s.size() != 4 && s.size() != 5)
    throw ShapeError("add_frame_pe: expected video tensor, got " +
                     to_string(s));
  const std::size_t r = s.size();
  const std::size_t frames = s[r - 4];
  const std::size_t c = s[r - 1];
  if (table.shape() != Shape{frames, c})
    throw ShapeError("add_frame_pe: table " + to_string(table.shape()) +
                     " does not match " + std::to_string(frames) +
                     " frames x " + std::to_string(c) + " channels");
  const std::size_t batch = r == 5 ? s[0] : 1;
  return ops::broadcast_add(x, table,
                            {batch, frames, s[r - 3] * s[r - 2], c});
}

template <class T>
Var<T> build_b_img(const Var<T>& table, std::size_t window) {
  const Shape& s = table.shape();
  const std::size_t k = bias_table_size(window);
  if (s.empty() || s.size() > 2 || s.back() != k)
    throw ShapeError("build_b_img: table " + to_string(s) + " needs " +
                     std::to_string(k) + " entries per head for M=" +
                     std::to_string(window));
  const std::size_t heads = s.size() == 2 ? s[0] : 1;
  const std::size_t l = window * window;
  auto map = relative_index_map(window);
  Shape so = s.size() == 2 ? Shape{heads, l, l} : Shape{l, l};
  Tensor<T> out(so);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t e = 0; e < l * l; ++e)
      out[h * l * l + e] = table.value()[h * k + map[e]];
  return record<T>("build_b_img", std::move(out), {table},
                   [map = std::move(map), heads, k, l](Node<T>& self) {
                     auto g = parent_grad(self, 0);
                     if (g.empty()) return;
                     for (std::size_t h = 0; h < heads; ++h)
                       for (std::size_t e = 0; e < l * l; ++e)
                         g[h * k + map[e]] += self.grad[h * l * l + e];
                   });
}

template <class T>
Var<T> tile_to_video(const Var<T>& b_img, std::size_t frames) {
  const Shape& s = b_img.shape();
  if ((s.size() != 2 && s.size() != 3) || s[s.size() - 1] != s[s.size() - 2])
    throw ShapeError("tile_to_video: expected square [L, L] or [heads, L, L], "
                     "got " + to_string(s));
  if (frames == 0) throw ShapeError("tile_to_video: zero frames");
  const std::size_t heads = s.size() == 3 ? s[0] : 1;
  const std::size_t l = s.back();
  const std::size_t fl = frames * l;
  Shape so = s.size() == 3 ? Shape{heads, fl, fl} : Shape{fl, fl};
  Tensor<T> out(so);
  const T* src = b_img.value().ptr();
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t row = 0; row < fl; ++row) {
      const T* srow = src + (h * l + row % l) * l;
      T* drow = out.ptr() + (h * fl + row) * fl;
      for (std::size_t f2 = 0; f2 < frames; ++f2)
        std::copy_n(srow, l, drow + f2 * l);
    }
  return record<T>("tile_to_video", std::move(out), {b_img},
                   [heads, l, fl, frames](Node<T>& self) {
                     auto g = parent_grad(self, 0);
                     if (g.empty()) return;
                     for (std::size_t h = 0; h < heads; ++h)
                       for (std::size_t row = 0; row < fl; ++row) {
                         const T* grow = self.grad.data() + (h * fl + row) * fl;
                         T* dst = g.data() + (h * l + row % l) * l;
                         for (std::size_t f2 = 0; f2 < frames; ++f2)
                           for (std::size_t j = 0; j < l; ++j)
                             dst[j] += grow[f2 * l + j];
                       }
                   });
}

template <class T>
Tensor<T> init_frame_pe(std::size_t frames, std::size_t channels) {
  return Tensor<T>({frames, channels});
}

template <class T>
Tensor<T> init_bias_table(std::size_t window, std::size_t heads, Rng& rng) {
  Tensor<T> t({heads, bias_table_size(window)});
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(0.0, 0.02));
  return t;
}

#define VDB_INSTANTIATE(T)                                                 \
  template Var<T> add_frame_pe<T>(const Var<T>&, const Var<T>&);           \
  template Var<T> build_b_img<T>(const Var<T>&, std::size_t);              \
  template Var<T> tile_to_video<T>(const Var<T>&, std::size_t);            \
  template Tensor<T> init_frame_pe<T>(std::size_t, std::size_t);           \
  template Tensor<T> init_bias_table<T>(std::size_t, std::size_t, Rng&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::mrpe
