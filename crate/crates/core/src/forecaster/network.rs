//! Parameter layout plus batched forward and backward passes.
//!
//! All parameters live in one flat `Vec<f64>`; every tensor is an offset into
//! it. Linear weights are stored `[in x out]` row-major with the bias right
//! after the weight. Encoder layers are pre-norm:
//! `h = h + Attn(LN(h)); h = h + FFN(LN(h))`, FFN = Linear, GELU, Linear.

use alloc::vec;
use alloc::vec::Vec;

use super::gemm::gemm;
use super::TsfConfig;
use crate::rng::{self, StreamRng};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinearIdx {
    pub w: usize,
    pub inp: usize,
    pub out: usize,
}

impl LinearIdx {
    fn b(&self) -> usize {
        self.w + self.inp * self.out
    }

    fn end(&self) -> usize {
        self.b() + self.out
    }

    fn weight<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.b()]
    }

    fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b()..self.end()]
    }

    fn grads<'a>(&self, g: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        g[self.w..self.end()].split_at_mut(self.inp * self.out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormIdx {
    pub g: usize,
    pub dim: usize,
}

impl NormIdx {
    fn gamma<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.g..self.g + self.dim]
    }

    fn beta<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.g + self.dim..self.g + 2 * self.dim]
    }

    fn grads<'a>(&self, g: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        g[self.g..self.g + 2 * self.dim].split_at_mut(self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EncoderIdx {
    ln1: NormIdx,
    qkv: LinearIdx,
    proj: LinearIdx,
    ln2: NormIdx,
    ff1: LinearIdx,
    ff2: LinearIdx,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub d: usize,
    pub heads: usize,
    pub l: usize,
    pub h: usize,
    pub embed_dim: usize,
    input: LinearIdx,
    layers: Vec<EncoderIdx>,
    head: LinearIdx,
    text: Vec<LinearIdx>,
    pub total: usize,
    /// Sinusoidal positional encoding, `l x d`.
    pe: Vec<f64>,
}

struct Alloc(usize);

impl Alloc {
    fn linear(&mut self, inp: usize, out: usize) -> LinearIdx {
        let idx = LinearIdx {
            w: self.0,
            inp,
            out,
        };
        self.0 = idx.end();
        idx
    }

    fn norm(&mut self, dim: usize) -> NormIdx {
        let idx = NormIdx { g: self.0, dim };
        self.0 += 2 * dim;
        idx
    }
}

impl Layout {
    pub fn new(c: &TsfConfig, multimodal: bool) -> Self {
        let d = c.hidden;
        let mut a = Alloc(0);
        let input = a.linear(1, d);
        let layers = (0..c.layers)
            .map(|_| EncoderIdx {
                ln1: a.norm(d),
                qkv: a.linear(d, 3 * d),
                proj: a.linear(d, d),
                ln2: a.norm(d),
                ff1: a.linear(d, c.ff_hidden),
                ff2: a.linear(c.ff_hidden, d),
            })
            .collect();
        let head = a.linear(c.lookback * d, c.horizon);
        let mut text = Vec::new();
        if multimodal {
            let mut prev = c.embed_dim;
            for &w in c.mlp_hidden.iter().chain(core::iter::once(&c.horizon)) {
                text.push(a.linear(prev, w));
                prev = w;
            }
        }
        let mut pe = vec![0.0; c.lookback * d];
        for pos in 0..c.lookback {
            for i in 0..d {
                let rate = libm::pow(10_000.0, (2 * (i / 2)) as f64 / d as f64);
                let angle = pos as f64 / rate;
                pe[pos * d + i] = if i % 2 == 0 {
                    libm::sin(angle)
                } else {
                    libm::cos(angle)
                };
            }
        }
        Self {
            d,
            heads: c.heads,
            l: c.lookback,
            h: c.horizon,
            embed_dim: c.embed_dim,
            input,
            layers,
            head,
            text,
            total: a.0,
            pe,
        }
    }

    pub fn multimodal(&self) -> bool {
        !self.text.is_empty()
    }

    /// Xavier-uniform weights, zero biases, unit layer-norm gains. The two
    /// output layers start at zero so a fresh model predicts a constant and
    /// the text branch initially leaves the numeric forecast untouched.
    pub fn init(&self, rng: &mut StreamRng) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        let mut linears: Vec<LinearIdx> = vec![self.input];
        for e in &self.layers {
            p[e.ln1.g..e.ln1.g + e.ln1.dim].fill(1.0);
            p[e.ln2.g..e.ln2.g + e.ln2.dim].fill(1.0);
            linears.extend([e.qkv, e.proj, e.ff1, e.ff2]);
        }
        if let Some((_, hidden)) = self.text.split_last() {
            linears.extend(hidden.iter().copied());
        }
        for lin in linears {
            let bound = libm::sqrt(6.0 / (lin.inp + lin.out) as f64);
            for w in &mut p[lin.w..lin.b()] {
                *w = rng::uniform_range(rng, -bound, bound);
            }
        }
        p
    }
}

fn linear_forward(lin: &LinearIdx, p: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n * lin.out];
    gemm(
        n,
        lin.inp,
        lin.out,
        x,
        false,
        lin.weight(p),
        false,
        &mut y,
        0.0,
    );
    let b = lin.bias(p);
    for row in y.chunks_exact_mut(lin.out) {
        row.iter_mut().zip(b).for_each(|(v, bi)| *v += bi);
    }
    y
}

/// Accumulates weight/bias gradients and returns `dx` when requested.
fn linear_backward(
    lin: &LinearIdx,
    p: &[f64],
    g: &mut [f64],
    x: &[f64],
    dy: &[f64],
    n: usize,
    want_dx: bool,
) -> Vec<f64> {
    let (dw, db) = lin.grads(g);
    gemm(lin.inp, n, lin.out, x, true, dy, false, dw, 1.0);
    for row in dy.chunks_exact(lin.out) {
        db.iter_mut().zip(row).for_each(|(d, r)| *d += r);
    }
    if !want_dx {
        return Vec::new();
    }
    let mut dx = vec![0.0; n * lin.inp];
    gemm(
        n,
        lin.out,
        lin.inp,
        dy,
        false,
        lin.weight(p),
        true,
        &mut dx,
        0.0,
    );
    dx
}

struct NormCache {
    xhat: Vec<f64>,
    rstd: Vec<f64>,
}

fn layernorm_forward(idx: &NormIdx, p: &[f64], x: &[f64]) -> (Vec<f64>, NormCache) {
    let d = idx.dim;
    let rows = x.len() / d;
    let (gamma, beta) = (idx.gamma(p), idx.beta(p));
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut rstd = vec![0.0; rows];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / libm::sqrt(var + LN_EPS);
        rstd[r] = s;
        for j in 0..d {
            let xh = (row[j] - mean) * s;
            xhat[r * d + j] = xh;
            y[r * d + j] = gamma[j] * xh + beta[j];
        }
    }
    (y, NormCache { xhat, rstd })
}

fn layernorm_backward(
    idx: &NormIdx,
    p: &[f64],
    g: &mut [f64],
    c: &NormCache,
    dy: &[f64],
) -> Vec<f64> {
    let d = idx.dim;
    let gamma = idx.gamma(p);
    let (dgamma, dbeta) = idx.grads(g);
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for (r, s) in c.rstd.iter().enumerate() {
        let xh = &c.xhat[r * d..(r + 1) * d];
        let dyr = &dy[r * d..(r + 1) * d];
        for j in 0..d {
            dgamma[j] += dyr[j] * xh[j];
            dbeta[j] += dyr[j];
            dxhat[j] = dyr[j] * gamma[j];
        }
        let m1 = dxhat.iter().sum::<f64>() / d as f64;
        let m2 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        for j in 0..d {
            dx[r * d + j] = s * (dxhat[j] - m1 - xh[j] * m2);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + 0.044_715 * x * x * x)))
}

fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + 0.044_715 * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044_715 * x * x)
}

/// Inverted dropout mask; `None` when dropout is off.
fn dropout_mask(len: usize, p: f64, rng: Option<&mut StreamRng>) -> Option<Vec<f64>> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    Some(
        (0..len)
            .map(|_| if rng::uniform(rng) < p { 0.0 } else { keep })
            .collect(),
    )
}

fn apply_mask(v: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        v.iter_mut().zip(m).for_each(|(x, k)| *x *= k);
    }
}

struct LayerCache {
    ln1: NormCache,
    a1: Vec<f64>,
    qkv: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    attn_mask: Option<Vec<f64>>,
    ln2: NormCache,
    a2: Vec<f64>,
    f1: Vec<f64>,
    act: Vec<f64>,
    ff_mask: Option<Vec<f64>>,
}

pub(crate) struct NumericCache {
    layers: Vec<LayerCache>,
    h_final: Vec<f64>,
}

pub(crate) struct TextCache {
    /// Input of every text layer (`inputs[0]` is the embedding batch).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of every hidden layer.
    pre: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
}

impl Layout {
    fn attention_forward(&self, qkv: &[f64], b: usize) -> (Vec<f64>, Vec<f64>) {
        let (l, d, nh) = (self.l, self.d, self.heads);
        let dh = d / nh;
        let scale = 1.0 / libm::sqrt(dh as f64);
        let mut ctx = vec![0.0; b * l * d];
        let mut probs = vec![0.0; b * nh * l * l];
        let mut scores = vec![0.0; l];
        for s in 0..b {
            for hd in 0..nh {
                for i in 0..l {
                    let qi = (s * l + i) * 3 * d + hd * dh;
                    let q = &qkv[qi..qi + dh];
                    let mut max = f64::NEG_INFINITY;
                    for (j, sc) in scores.iter_mut().enumerate() {
                        let kj = (s * l + j) * 3 * d + d + hd * dh;
                        let dot: f64 = q.iter().zip(&qkv[kj..kj + dh]).map(|(a, b)| a * b).sum();
                        *sc = dot * scale;
                        max = max.max(*sc);
                    }
                    let mut sum = 0.0;
                    for sc in scores.iter_mut() {
                        *sc = libm::exp(*sc - max);
                        sum += *sc;
                    }
                    let prow = &mut probs[((s * nh + hd) * l + i) * l..][..l];
                    let out = &mut ctx[(s * l + i) * d + hd * dh..][..dh];
                    for j in 0..l {
                        let pj = scores[j] / sum;
                        prow[j] = pj;
                        let vj = (s * l + j) * 3 * d + 2 * d + hd * dh;
                        out.iter_mut()
                            .zip(&qkv[vj..vj + dh])
                            .for_each(|(o, v)| *o += pj * v);
                    }
                }
            }
        }
        (ctx, probs)
    }

    fn attention_backward(&self, qkv: &[f64], probs: &[f64], dctx: &[f64], b: usize) -> Vec<f64> {
        let (l, d, nh) = (self.l, self.d, self.heads);
        let dh = d / nh;
        let scale = 1.0 / libm::sqrt(dh as f64);
        let mut dqkv = vec![0.0; qkv.len()];
        let mut dp = vec![0.0; l];
        for s in 0..b {
            for hd in 0..nh {
                for i in 0..l {
                    let prow = &probs[((s * nh + hd) * l + i) * l..][..l];
                    let dc = &dctx[(s * l + i) * d + hd * dh..][..dh];
                    for j in 0..l {
                        let vj = (s * l + j) * 3 * d + 2 * d + hd * dh;
                        dp[j] = dc.iter().zip(&qkv[vj..vj + dh]).map(|(a, b)| a * b).sum();
                        dqkv[vj..vj + dh]
                            .iter_mut()
                            .zip(dc)
                            .for_each(|(g, c)| *g += prow[j] * c);
                    }
                    let weighted: f64 = prow.iter().zip(&dp).map(|(p, g)| p * g).sum();
                    let qi = (s * l + i) * 3 * d + hd * dh;
                    for j in 0..l {
                        let ds = prow[j] * (dp[j] - weighted) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        let kj = (s * l + j) * 3 * d + d + hd * dh;
                        for c in 0..dh {
                            dqkv[qi + c] += ds * qkv[kj + c];
                            dqkv[kj + c] += ds * qkv[qi + c];
                        }
                    }
                }
            }
        }
        dqkv
    }

    /// Numeric branch on a `b x l` batch; returns `b x h` outputs.
    pub fn numeric_forward(
        &self,
        p: &[f64],
        x: &[f64],
        b: usize,
        dropout: f64,
        mut rng: Option<&mut StreamRng>,
    ) -> (Vec<f64>, NumericCache) {
        let (l, d) = (self.l, self.d);
        let n = b * l;
        let (w_in, b_in) = (self.input.weight(p), self.input.bias(p));
        let mut h = vec![0.0; n * d];
        for r in 0..n {
            let pos = r % l;
            let row = &mut h[r * d..(r + 1) * d];
            for j in 0..d {
                row[j] = x[r] * w_in[j] + b_in[j] + self.pe[pos * d + j];
            }
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for e in &self.layers {
            let (a1, ln1) = layernorm_forward(&e.ln1, p, &h);
            let qkv = linear_forward(&e.qkv, p, &a1, n);
            let (ctx, probs) = self.attention_forward(&qkv, b);
            let mut o = linear_forward(&e.proj, p, &ctx, n);
            let attn_mask = dropout_mask(o.len(), dropout, rng.as_deref_mut());
            apply_mask(&mut o, &attn_mask);
            h.iter_mut().zip(&o).for_each(|(hv, ov)| *hv += ov);
            let (a2, ln2) = layernorm_forward(&e.ln2, p, &h);
            let f1 = linear_forward(&e.ff1, p, &a2, n);
            let act: Vec<f64> = f1.iter().map(|v| gelu(*v)).collect();
            let mut f2 = linear_forward(&e.ff2, p, &act, n);
            let ff_mask = dropout_mask(f2.len(), dropout, rng.as_deref_mut());
            apply_mask(&mut f2, &ff_mask);
            h.iter_mut().zip(&f2).for_each(|(hv, fv)| *hv += fv);
            layers.push(LayerCache {
                ln1,
                a1,
                qkv,
                probs,
                ctx,
                attn_mask,
                ln2,
                a2,
                f1,
                act,
                ff_mask,
            });
        }
        let out = linear_forward(&self.head, p, &h, b);
        (out, NumericCache { layers, h_final: h })
    }

    pub fn numeric_backward(
        &self,
        p: &[f64],
        g: &mut [f64],
        x: &[f64],
        cache: &NumericCache,
        dout: &[f64],
        b: usize,
    ) {
        let (l, d) = (self.l, self.d);
        let n = b * l;
        let mut dh = linear_backward(&self.head, p, g, &cache.h_final, dout, b, true);
        for (e, c) in self.layers.iter().zip(&cache.layers).rev() {
            let mut df2 = dh.clone();
            apply_mask(&mut df2, &c.ff_mask);
            let dact = linear_backward(&e.ff2, p, g, &c.act, &df2, n, true);
            let df1: Vec<f64> = dact
                .iter()
                .zip(&c.f1)
                .map(|(da, f)| da * gelu_grad(*f))
                .collect();
            let da2 = linear_backward(&e.ff1, p, g, &c.a2, &df1, n, true);
            let dln2 = layernorm_backward(&e.ln2, p, g, &c.ln2, &da2);
            dh.iter_mut().zip(&dln2).for_each(|(a, v)| *a += v);

            let mut dout_attn = dh.clone();
            apply_mask(&mut dout_attn, &c.attn_mask);
            let dctx = linear_backward(&e.proj, p, g, &c.ctx, &dout_attn, n, true);
            let dqkv = self.attention_backward(&c.qkv, &c.probs, &dctx, b);
            let da1 = linear_backward(&e.qkv, p, g, &c.a1, &dqkv, n, true);
            let dln1 = layernorm_backward(&e.ln1, p, g, &c.ln1, &da1);
            dh.iter_mut().zip(&dln1).for_each(|(a, v)| *a += v);
        }
        let (dw, db) = self.input.grads(g);
        for r in 0..n {
            let row = &dh[r * d..(r + 1) * d];
            for j in 0..d {
                dw[j] += x[r] * row[j];
                db[j] += row[j];
            }
        }
        debug_assert_eq!(x.len(), b * l);
    }

    /// Text branch on a `b x embed_dim` batch; returns `b x h` outputs.
    pub fn text_forward(
        &self,
        p: &[f64],
        emb: &[f64],
        b: usize,
        dropout: f64,
        mut rng: Option<&mut StreamRng>,
    ) -> (Vec<f64>, TextCache) {
        let mut inputs = vec![emb.to_vec()];
        let mut pre = Vec::new();
        let mut masks = Vec::new();
        let last = self.text.len() - 1;
        let mut out = Vec::new();
        for (i, lin) in self.text.iter().enumerate() {
            let a = linear_forward(lin, p, &inputs[i], b);
            if i == last {
                out = a;
                break;
            }
            let mut z: Vec<f64> = a.iter().map(|v| v.max(0.0)).collect();
            let mask = dropout_mask(z.len(), dropout, rng.as_deref_mut());
            apply_mask(&mut z, &mask);
            pre.push(a);
            masks.push(mask);
            inputs.push(z);
        }
        (out, TextCache { inputs, pre, masks })
    }

    pub fn text_backward(
        &self,
        p: &[f64],
        g: &mut [f64],
        cache: &TextCache,
        dout: &[f64],
        b: usize,
    ) {
        let mut d = dout.to_vec();
        for i in (0..self.text.len()).rev() {
            let dz = linear_backward(&self.text[i], p, g, &cache.inputs[i], &d, b, i > 0);
            if i == 0 {
                break;
            }
            let mut da = dz;
            apply_mask(&mut da, &cache.masks[i - 1]);
            da.iter_mut().zip(&cache.pre[i - 1]).for_each(|(v, a)| {
                if *a <= 0.0 {
                    *v = 0.0;
                }
            });
            d = da;
        }
    }
}

/// Fused prediction `tsf + alpha * text` and, when targets are given, the
/// MSE loss with gradients accumulated into `g`.
pub(crate) struct StepInput<'a> {
    pub x: &'a [f64],
    pub emb: Option<&'a [f64]>,
    pub y: &'a [f64],
    pub b: usize,
}

pub(crate) fn loss_and_grad(
    layout: &Layout,
    p: &[f64],
    g: &mut [f64],
    input: &StepInput<'_>,
    alpha: f64,
    dropout: f64,
    mut rng: Option<&mut StreamRng>,
) -> f64 {
    let b = input.b;
    let (tsf, ncache) = layout.numeric_forward(p, input.x, b, dropout, rng.as_deref_mut());
    let text = match (layout.multimodal(), input.emb) {
        (true, Some(emb)) => Some(layout.text_forward(p, emb, b, dropout, rng)),
        _ => None,
    };
    let mut pred = tsf;
    if let Some((mlp, _)) = &text {
        pred.iter_mut().zip(mlp).for_each(|(v, m)| *v += alpha * m);
    }
    let count = pred.len() as f64;
    let mut loss = 0.0;
    let mut dpred = vec![0.0; pred.len()];
    for ((dp, pv), yv) in dpred.iter_mut().zip(&pred).zip(input.y) {
        let e = pv - yv;
        loss += e * e;
        *dp = 2.0 * e / count;
    }
    layout.numeric_backward(p, g, input.x, &ncache, &dpred, b);
    if let Some((_, tcache)) = &text {
        let dmlp: Vec<f64> = dpred.iter().map(|v| alpha * v).collect();
        layout.text_backward(p, g, tcache, &dmlp, b);
    }
    loss / count
}
