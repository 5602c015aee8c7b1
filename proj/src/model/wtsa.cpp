// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/wtsa.hpp"

#include <algorithm>

#include "vdb/mrpe.hpp"
#include "vdb/ops.hpp"
#include "vdb/windowing.hpp"

namespace vdb::wtsa {

using nn::ParamKind;

std::size_t heads_for(std::size_t channels) {
  return std::max<std::size_t>(1, channels / 32);
}

template <class T>
WtsaParams<T> WtsaParams<T>::make(nn::ParamSet<T>& ps, const std::string& name,
                                  std::size_t channels, std::size_t window,
                                  Rng& rng) {
  WtsaParams p;
  p.window = window;
  p.heads = heads_for(channels);
  if (channels % p.heads != 0)
    throw ShapeError("wtsa: " + std::to_string(channels) +
                     " channels not divisible by " + std::to_string(p.heads) +
                     " heads");
  p.norm = nn::Norm<T>::make(ps, name + ".norm", channels, ParamKind::kAttention);
  p.q = nn::Linear<T>::make(ps, name + ".q", channels, channels, rng,
                            ParamKind::kAttention);
  p.k = nn::Linear<T>::make(ps, name + ".k", channels, channels, rng,
                            ParamKind::kAttention);
  p.v = nn::Linear<T>::make(ps, name + ".v", channels, channels, rng,
                            ParamKind::kAttention);
  p.proj = nn::Linear<T>::make(ps, name + ".proj", channels, channels, rng,
                               ParamKind::kAttention);
  p.bias_table = ps.add(name + ".rpb", mrpe::init_bias_table<T>(window, p.heads, rng),
                        ParamKind::kRelBias);
  return p;
}

template <class T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 const Var<T>& b_video) {
  if (q.shape().size() != 2)
    throw ShapeError("attention: expected [tokens, D], got " +
                     to_string(q.shape()));
  const std::size_t len = q.shape()[0], d = q.shape()[1];
  const Shape windowed{1, len, d};
  Var<T> bias;
  if (b_video.defined()) {
    if (b_video.shape() != Shape{len, len})
      throw ShapeError("attention: bias " + to_string(b_video.shape()) +
                       " for " + std::to_string(len) + " tokens");
    bias = ops::reshape(b_video, {1, len, len});
  }
  Var<T> out = ops::multihead_attention(
      ops::reshape(q, windowed), ops::reshape(k, windowed),
      ops::reshape(v, windowed), bias, 1);
  return ops::reshape(out, {len, d});
}

template <class T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k,
                            const Tensor<T>* bias, std::size_t heads) {
  return ops::attention_probs(q, k, bias, heads);
}

template <class T>
Var<T> wtsa_forward(const Var<T>& x, const WtsaParams<T>& p, bool use_bias) {
  const Shape in_shape = x.shape();
  const auto geom = windowing::WindowGeometry::from_shape(in_shape, p.window);
  const Var<T> video =
      in_shape.size() == 4 ? ops::reshape(x, geom.video_shape()) : x;

  const Var<T> h = ops::layer_norm(video, p.norm.gamma, p.norm.beta);
  const Var<T> tokens = windowing::partition(h, p.window);
  Var<T> bias;
  if (use_bias)
    bias = mrpe::tile_to_video(mrpe::build_b_img(p.bias_table, p.window),
                               geom.frames);
  const Var<T> attended = ops::multihead_attention(p.q(tokens), p.k(tokens),
                                                   p.v(tokens), bias, p.heads);
  const Var<T> back = windowing::reverse(p.proj(attended), geom);
  const Var<T> out = ops::add(video, back);
  return in_shape.size() == 4 ? ops::reshape(out, in_shape) : out;
}

template <class T>
ResBlockParams<T> ResBlockParams<T>::make(nn::ParamSet<T>& ps,
                                          const std::string& name,
                                          std::size_t in, std::size_t out,
                                          std::size_t temb_dim,
                                          std::size_t groups, Rng& rng) {
  if (in % groups != 0)
    throw ShapeError("resblock " + name + ": " + std::to_string(in) +
                     " channels not divisible into " + std::to_string(groups) +
                     " groups");
  ResBlockParams p;
  p.groups = groups;
  p.norm = nn::Norm<T>::make(ps, name + ".norm", in);
  p.conv1 = nn::Conv3x3<T>::make(ps, name + ".conv1", in, out, 1, rng);
  p.temb = nn::Linear<T>::make(ps, name + ".temb", temb_dim, out, rng);
  p.conv2 = nn::Conv3x3<T>::make(ps, name + ".conv2", out, out, 1, rng);
  if (in != out) p.skip = nn::Linear<T>::make(ps, name + ".skip", in, out, rng);
  return p;
}

template <class T>
Var<T> resblock_forward(const Var<T>& x, const Var<T>& temb,
                        const ResBlockParams<T>& p) {
  const Shape& s = x.shape();
  if (s.size() != 5)
    throw ShapeError("resblock: expected [B, F, H, W, C], got " + to_string(s));
  Var<T> h = p.conv1(ops::swish(nn::group_norm_frames(x, p.groups, p.norm)));
  const std::size_t cout = h.shape()[4];
  const Var<T> shift = p.temb(temb);  // [B, Cout]
  if (shift.shape() != Shape{s[0], cout})
    throw ShapeError("resblock: timestep embedding " + to_string(temb.shape()) +
                     " for batch " + std::to_string(s[0]));
  h = ops::broadcast_add(h, shift, {1, s[0], s[1] * s[2] * s[3], cout});
  h = p.conv2(ops::swish(h));
  const Var<T> residual = p.skip.weight.defined() ? p.skip(x) : x;
  return ops::add(residual, h);
}

template <class T>
BlockParams<T> BlockParams<T>::make(nn::ParamSet<T>& ps,
                                    const std::string& name, std::size_t in,
                                    std::size_t out, std::size_t frames,
                                    std::size_t temb_dim, std::size_t groups,
                                    const WindowSizes& windows, Rng& rng) {
  BlockParams p;
  p.res = ResBlockParams<T>::make(ps, name + ".res", in, out, temb_dim, groups,
                                  rng);
  p.frame_pe = ps.add(name + ".frame_pe", mrpe::init_frame_pe<T>(frames, out),
                      ParamKind::kFramePE);
  for (std::size_t i = 0; i < windows.size(); ++i)
    p.attn.push_back(WtsaParams<T>::make(
        ps, name + ".attn" + std::to_string(i), out, windows[i], rng));
  return p;
}

template <class T>
Var<T> block_forward(const Var<T>& x, const Var<T>& temb,
                     const BlockParams<T>& p, const AblationFlags& flags) {
  Var<T> h = resblock_forward(x, temb, p.res);
  if (!flags.wtsa) return h;
  if (flags.mpe) h = mrpe::add_frame_pe(h, p.frame_pe);
  for (const auto& a : p.attn) h = wtsa_forward(h, a, flags.rpb);
  return h;
}

#define VDB_INSTANTIATE(T)                                                    \
  template struct WtsaParams<T>;                                              \
  template struct ResBlockParams<T>;                                          \
  template struct BlockParams<T>;                                             \
  template Var<T> attention<T>(const Var<T>&, const Var<T>&, const Var<T>&,   \
                               const Var<T>&);                                \
  template Tensor<T> attention_weights<T>(const Tensor<T>&, const Tensor<T>&, \
                                          const Tensor<T>*, std::size_t);     \
  template Var<T> wtsa_forward<T>(const Var<T>&, const WtsaParams<T>&, bool); \
  template Var<T> resblock_forward<T>(const Var<T>&, const Var<T>&,           \
                                      const ResBlockParams<T>&);              \
  template Var<T> block_forward<T>(const Var<T>&, const Var<T>&,              \
                                   const BlockParams<T>&,                     \
                                   const AblationFlags&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::wtsa
