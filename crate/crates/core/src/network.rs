//! The fully connected two-layer network
//!
//! ```text
//! U = A·x + a,   Z = relu(U),   z = Bᵀ·Z + b,   y = ω(z)
//! ```
//!
//! with `A: n×k`, `a, B: n`, `b` scalar. Parameters live in one flat buffer
//! laid out as `[A (row-major by hidden unit), a, B, b]`, which is also the
//! checkpoint layout and lets the trainer treat gradients and power
//! estimates as plain vectors of the same shape.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::OutputNonlinearity;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type ParamGradient = NetParams;

impl NetParams {
    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("n_hidden", "must be at least 1"));
        }
        if k < 1 {
            return Err(Error::invalid("k", "input dimension must be at least 1"));
        }
        Ok(Self {
            n,
            k,
            data: vec![0.0; n * k + 2 * n + 1],
        })
    }

    /// Builds parameters from their four blocks.
    pub fn from_parts(
        n: usize,
        k: usize,
        hidden_weights: &[f64],
        hidden_bias: &[f64],
        output_weights: &[f64],
        output_bias: f64,
    ) -> Result<Self> {
        let mut p = Self::zeros(n, k)?;
        check_len(n * k, hidden_weights.len())?;
        p.hidden_weights_mut().copy_from_slice(hidden_weights);
        check_len(n, hidden_bias.len())?;
        p.hidden_bias_mut().copy_from_slice(hidden_bias);
        check_len(n, output_weights.len())?;
        p.output_weights_mut().copy_from_slice(output_weights);
        *p.output_bias_mut() = output_bias;
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            n: self.n,
            k: self.k,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.k
    }

    /// All parameters in checkpoint order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.data[..self.n * self.k]
    }

    pub fn hidden_bias(&self) -> &[f64] {
        let o = self.n * self.k;
        &self.data[o..o + self.n]
    }

    pub fn output_weights(&self) -> &[f64] {
        let o = self.n * self.k + self.n;
        &self.data[o..o + self.n]
    }

    pub fn output_bias(&self) -> f64 {
        self.data[self.data.len() - 1]
    }

    pub fn hidden_weights_mut(&mut self) -> &mut [f64] {
        let end = self.n * self.k;
        &mut self.data[..end]
    }

    pub fn hidden_bias_mut(&mut self) -> &mut [f64] {
        let o = self.n * self.k;
        &mut self.data[o..o + self.n]
    }

    pub fn output_weights_mut(&mut self) -> &mut [f64] {
        let o = self.n * self.k + self.n;
        &mut self.data[o..o + self.n]
    }

    pub fn output_bias_mut(&mut self) -> &mut f64 {
        let last = self.data.len() - 1;
        &mut self.data[last]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Glorot-uniform weights, zero offsets.
    ///
    /// `A ~ U[-√(6/(k+n)), √(6/(k+n))]`, `B ~ U[-√(6/(n+1)), √(6/(n+1))]`.
    /// The draw only depends on `seed`, `n` and `k`, so runs that share a seed
    /// start from identical networks.
    pub fn glorot_init(n: usize, k: usize, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(n, k)?;
        let mut rng = substream(seed, Stream::Init, 0);
        let limit_a = (6.0 / (k + n) as f64).sqrt();
        for w in p.hidden_weights_mut() {
            *w = rng.random_range(-limit_a..=limit_a);
        }
        let limit_b = (6.0 / (n + 1) as f64).sqrt();
        for w in p.output_weights_mut() {
            *w = rng.random_range(-limit_b..=limit_b);
        }
        Ok(p)
    }

    /// Evaluates the network on one input.
    pub fn forward(&self, x: &[f64], omega: &OutputNonlinearity) -> Result<ForwardTrace> {
        check_len(self.k, x.len())?;
        let mut pre = vec![0.0; self.n];
        let mut hidden = vec![0.0; self.n];
        let z = self.forward_into(x, &mut pre, &mut hidden);
        Ok(ForwardTrace {
            pre,
            hidden,
            z,
            y: omega.omega(z),
        })
    }

    /// Forward pass into caller-owned buffers, returning the pre-output `z`.
    /// Shapes are the caller's responsibility.
    pub(crate) fn forward_into(&self, x: &[f64], pre: &mut [f64], hidden: &mut [f64]) -> f64 {
        let weights = self.hidden_weights();
        let bias = self.hidden_bias();
        let out_w = self.output_weights();
        let mut z = self.output_bias();
        for i in 0..self.n {
            let row = &weights[i * self.k..(i + 1) * self.k];
            let u = dot(row, x) + bias[i];
            let h = relu(u);
            pre[i] = u;
            hidden[i] = h;
            z += out_w[i] * h;
        }
        z
    }

    /// Pre-output `z` without keeping intermediate values.
    pub fn pre_output(&self, x: &[f64]) -> f64 {
        let weights = self.hidden_weights();
        let bias = self.hidden_bias();
        let out_w = self.output_weights();
        let mut z = self.output_bias();
        for i in 0..self.n {
            let row = &weights[i * self.k..(i + 1) * self.k];
            z += out_w[i] * relu(dot(row, x) + bias[i]);
        }
        z
    }

    /// Gradient of `ω(z)` with respect to every parameter:
    ///
    /// ```text
    /// ∇A = ω'(z)(B ⊙ d'(U))xᵀ   ∇a = ω'(z)(B ⊙ d'(U))   ∇B = ω'(z)Z   ∇b = ω'(z)
    /// ```
    pub fn gradient(
        &self,
        x: &[f64],
        trace: &ForwardTrace,
        omega: &OutputNonlinearity,
    ) -> Result<ParamGradient> {
        check_len(self.k, x.len())?;
        check_len(self.n, trace.pre.len())?;
        check_len(self.n, trace.hidden.len())?;
        let mut out = self.zeros_like();
        self.scaled_grad_into(
            x,
            &trace.pre,
            &trace.hidden,
            omega.omega_prime(trace.z),
            &mut out,
        );
        Ok(out)
    }

    /// Writes `scale · ∇z` into `out`. Used with `scale = ω'(z)` for the
    /// difference criterion and with the penalty derivative for sum criteria.
    pub(crate) fn scaled_grad_into(
        &self,
        x: &[f64],
        pre: &[f64],
        hidden: &[f64],
        scale: f64,
        out: &mut NetParams,
    ) {
        let (n, k) = (self.n, self.k);
        let out_w = self.output_weights();
        let data = &mut out.data;
        let (ga_w, rest) = data.split_at_mut(n * k);
        let (ga_b, rest) = rest.split_at_mut(n);
        let (gb_w, gb_b) = rest.split_at_mut(n);
        for i in 0..n {
            // d'(U) = 1 for U > 0, 0 otherwise
            let c = if pre[i] > 0.0 { scale * out_w[i] } else { 0.0 };
            ga_b[i] = c;
            let row = &mut ga_w[i * k..(i + 1) * k];
            if c == 0.0 {
                row.fill(0.0);
            } else {
                for (g, &xj) in row.iter_mut().zip(x) {
                    *g = c * xj;
                }
            }
            gb_w[i] = scale * hidden[i];
        }
        gb_b[0] = scale;
    }

    /// Like `scaled_grad_into` but adds into `out`.
    pub(crate) fn add_scaled_grad(
        &self,
        x: &[f64],
        pre: &[f64],
        hidden: &[f64],
        scale: f64,
        out: &mut NetParams,
    ) {
        let (n, k) = (self.n, self.k);
        let out_w = self.output_weights();
        let data = &mut out.data;
        let (ga_w, rest) = data.split_at_mut(n * k);
        let (ga_b, rest) = rest.split_at_mut(n);
        let (gb_w, gb_b) = rest.split_at_mut(n);
        for i in 0..n {
            if pre[i] > 0.0 {
                let c = scale * out_w[i];
                ga_b[i] += c;
                for (g, &xj) in ga_w[i * k..(i + 1) * k].iter_mut().zip(x) {
                    *g += c * xj;
                }
            }
            gb_w[i] += scale * hidden[i];
        }
        gb_b[0] += scale;
    }

    /// Binary checkpoint: little-endian `u64` n, `u64` k, then every
    /// parameter as `f64` in layout order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.k as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let bad = |e: std::io::Error| Error::invalid("checkpoint", e.to_string());
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(bad)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(bad)?;
        let k = u64::from_le_bytes(word) as usize;
        let len = n
            .checked_mul(k)
            .and_then(|nk| nk.checked_add(2 * n + 1))
            .ok_or_else(|| Error::invalid("checkpoint", "header sizes overflow"))?;
        let mut p = Self::zeros(n, k)?;
        debug_assert_eq!(p.data.len(), len);
        for v in &mut p.data {
            r.read_exact(&mut word).map_err(bad)?;
            *v = f64::from_le_bytes(word);
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(std::io::BufReader::new(file))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("NetParams serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)
            .map_err(|e| Error::invalid("checkpoint", e.to_string()))?;
        if p.n < 1 || p.k < 1 || p.data.len() != p.n * p.k + 2 * p.n + 1 {
            return Err(Error::invalid("checkpoint", "inconsistent n, k and data length"));
        }
        Ok(p)
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `U`
    pub pre: Vec<f64>,
    /// `Z = relu(U)`
    pub hidden: Vec<f64>,
    pub z: f64,
    /// `ω(z)`
    pub y: f64,
}

#[inline]
pub(crate) fn relu(u: f64) -> f64 {
    if u > 0.0 {
        u
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
