use std::fmt::Debug;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, LinalgScalar, ScalarOperand};
use num_traits::{Float, NumAssign};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

/// Rows processed together; fixed so reductions do not depend on scheduling.
pub const CHUNK_ROWS: usize = 256;

/// Floating-point storage type of a network.
pub trait Real: Float + NumAssign + LinalgScalar + ScalarOperand + Send + Sync + Debug + Default + 'static {
    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply<F: Real>(self, x: F) -> F {
        match self {
            Self::Relu => x.max(F::zero()),
            Self::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output<F: Real>(self, y: F) -> F {
        match self {
            Self::Relu => {
                if y > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Self::Tanh => F::one() - y * y,
        }
    }
}

/// Fully connected network; the output layer is linear.
///
/// Parameters live in one flat vector: for each layer the `in × out`
/// row-major weight matrix followed by the `out` biases, so a layer computes
/// `Y = X·W + b` on row-batched inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<F>,
}

/// Layer outputs kept for the backward pass. `layers[0]` is the input and
/// the last entry is the network output.
#[derive(Debug, Clone)]
pub struct Tape<F> {
    pub layers: Vec<Array2<F>>,
}

impl<F: Real> Tape<F> {
    pub fn output(&self) -> &Array2<F> {
        self.layers.last().expect("tape holds the input")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardOptions {
    pub input_grad: bool,
    /// Keep the gradient with respect to every layer's pre-activation.
    pub layer_deltas: bool,
}

#[derive(Debug, Clone)]
pub struct Grads<F> {
    /// Same layout as the parameters, summed over rows.
    pub params: Vec<f64>,
    pub input: Option<Array2<F>>,
    /// Per layer, rows × out.
    pub deltas: Option<Vec<Array2<F>>>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidConfig(format!("network sizes {sizes:?} need >= 2 positive widths")));
    }
    Ok(())
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn row_chunks<F: Real>(x: ArrayView2<'_, F>) -> Vec<ArrayView2<'_, F>> {
    let rows = x.nrows();
    (0..rows)
        .step_by(CHUNK_ROWS)
        .map(|r0| x.slice_move(s![r0..(r0 + CHUNK_ROWS).min(rows), ..]))
        .collect()
}

fn stack<F: Real>(parts: Vec<Array2<F>>, cols: usize) -> Array2<F> {
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = Array2::zeros((rows, cols));
    let mut at = 0;
    for p in parts {
        let n = p.nrows();
        out.slice_mut(s![at..at + n, ..]).assign(&p);
        at += n;
    }
    out
}

impl<F: Real> Mlp<F> {
    /// Uniform initialisation in `±1/√fan_in` for weights and biases.
    pub fn new(sizes: &[usize], activation: Activation, rng: &mut Rng) -> Result<Self> {
        check_sizes(sizes)?;
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(F::of(rng.random_range(-bound..bound)));
            }
        }
        Ok(Self { sizes: sizes.to_vec(), activation, params })
    }

    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self { sizes: sizes.to_vec(), activation, params: vec![F::zero(); param_count(sizes)] })
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Vec<F>) -> Result<Self> {
        check_sizes(sizes)?;
        if params.len() != param_count(sizes) {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters given for sizes {sizes:?}, expected {}",
                params.len(),
                param_count(sizes)
            )));
        }
        Ok(Self { sizes: sizes.to_vec(), activation, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    /// Offset of layer `l`'s weights in the flat parameter vector.
    pub fn layer_offset(&self, l: usize) -> usize {
        param_count(&self.sizes[..=l])
    }

    pub fn weight(&self, l: usize) -> ArrayView2<'_, F> {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.layer_offset(l);
        ArrayView2::from_shape((i, o), &self.params[off..off + i * o]).unwrap()
    }

    pub fn bias(&self, l: usize) -> ArrayView1<'_, F> {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.layer_offset(l) + i * o;
        ArrayView1::from(&self.params[off..off + o])
    }

    fn check_input(&self, x: &ArrayView2<'_, F>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, l: usize, a: &ArrayView2<'_, F>) -> Array2<F> {
        let mut z = a.dot(&self.weight(l));
        z += &self.bias(l);
        if l + 1 < self.n_layers() {
            let act = self.activation;
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }

    fn chunk_tape(&self, x: ArrayView2<'_, F>) -> Vec<Array2<F>> {
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(x.to_owned());
        for l in 0..self.n_layers() {
            let z = self.layer_forward(l, &layers[l].view());
            layers.push(z);
        }
        layers
    }

    pub fn forward(&self, x: ArrayView2<'_, F>) -> Result<Array2<F>> {
        self.check_input(&x)?;
        let parts: Vec<Array2<F>> = row_chunks(x)
            .into_par_iter()
            .map(|c| {
                let mut a = c.to_owned();
                for l in 0..self.n_layers() {
                    a = self.layer_forward(l, &a.view());
                }
                a
            })
            .collect();
        Ok(stack(parts, self.output_dim()))
    }

    pub fn forward_one(&self, x: &[F]) -> Result<Array1<F>> {
        let v = ArrayView2::from_shape((1, x.len()), x).unwrap();
        Ok(self.forward(v)?.row(0).to_owned())
    }

    pub fn forward_tape(&self, x: ArrayView2<'_, F>) -> Result<Tape<F>> {
        self.check_input(&x)?;
        let parts: Vec<Vec<Array2<F>>> = row_chunks(x).into_par_iter().map(|c| self.chunk_tape(c)).collect();
        let mut layers = Vec::with_capacity(self.sizes.len());
        for (l, &w) in self.sizes.iter().enumerate() {
            layers.push(stack(parts.iter().map(|p| p[l].clone()).collect(), w));
        }
        Ok(Tape { layers })
    }

    /// Gradients of `Σ_rows ⟨dy_row, f(x_row)⟩`.
    pub fn backward(&self, tape: &Tape<F>, dy: ArrayView2<'_, F>, opts: BackwardOptions) -> Result<Grads<F>> {
        let out = tape.output();
        if dy.dim() != out.dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient {:?} does not match output {:?}",
                dy.dim(),
                out.dim()
            )));
        }
        let rows = dy.nrows();
        let starts: Vec<usize> = (0..rows).step_by(CHUNK_ROWS).collect();
        type ChunkOut<F> = (Vec<f64>, Option<Array2<F>>, Vec<Array2<F>>);
        let parts: Vec<ChunkOut<F>> = starts
            .into_par_iter()
            .map(|r0| {
                let r1 = (r0 + CHUNK_ROWS).min(rows);
                let mut g = vec![0.0f64; self.params.len()];
                let mut delta = dy.slice(s![r0..r1, ..]).to_owned();
                let mut deltas = Vec::new();
                let mut input = None;
                for l in (0..self.n_layers()).rev() {
                    let a_in = tape.layers[l].slice(s![r0..r1, ..]);
                    let gw = a_in.t().dot(&delta);
                    let off = self.layer_offset(l);
                    for (slot, v) in g[off..].iter_mut().zip(gw.iter()) {
                        *slot += v.f64();
                    }
                    let boff = off + gw.len();
                    for row in delta.rows() {
                        for (slot, v) in g[boff..].iter_mut().zip(row.iter()) {
                            *slot += v.f64();
                        }
                    }
                    if opts.layer_deltas {
                        deltas.push(delta.clone());
                    }
                    if l > 0 || opts.input_grad {
                        let mut d_in = delta.dot(&self.weight(l).t());
                        if l > 0 {
                            let act = self.activation;
                            d_in.zip_mut_with(&a_in, |d, &y| *d *= act.derivative_from_output(y));
                            delta = d_in;
                        } else {
                            input = Some(d_in);
                        }
                    }
                }
                deltas.reverse();
                (g, input, deltas)
            })
            .collect();

        let mut params = vec![0.0f64; self.params.len()];
        for (g, _, _) in &parts {
            for (p, v) in params.iter_mut().zip(g) {
                *p += v;
            }
        }
        let input = opts.input_grad.then(|| {
            stack(parts.iter().map(|p| p.1.clone().unwrap()).collect(), self.input_dim())
        });
        let deltas = opts.layer_deltas.then(|| {
            (0..self.n_layers())
                .map(|l| stack(parts.iter().map(|p| p.2[l].clone()).collect(), self.sizes[l + 1]))
                .collect()
        });
        Ok(Grads { params, input, deltas })
    }

    /// Directional derivative of the outputs along parameter tangent `v`.
    pub fn jvp(&self, tape: &Tape<F>, v: &[F]) -> Result<Array2<F>> {
        if v.len() != self.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "tangent has {} entries, network has {} parameters",
                v.len(),
                self.params.len()
            )));
        }
        let tangent = Mlp { sizes: self.sizes.clone(), activation: self.activation, params: v.to_vec() };
        let rows = tape.layers[0].nrows();
        let mut dz: Array2<F> = Array2::zeros((rows, self.sizes[1]));
        for l in 0..self.n_layers() {
            let a_in = &tape.layers[l];
            let mut z = a_in.dot(&tangent.weight(l));
            z += &tangent.bias(l);
            if l > 0 {
                z = z + dz.dot(&self.weight(l));
            }
            if l + 1 < self.n_layers() {
                let act = self.activation;
                z.zip_mut_with(&tape.layers[l + 1], |d, &y| *d *= act.derivative_from_output(y));
            }
            dz = z;
        }
        Ok(dz)
    }

    pub fn cast<G: Real>(&self) -> Mlp<G> {
        Mlp {
            sizes: self.sizes.clone(),
            activation: self.activation,
            params: self.params.iter().map(|p| G::of(p.f64())).collect(),
        }
    }

    /// `self ← τ·other + (1 − τ)·self`.
    pub fn polyak_from(&mut self, other: &Mlp<F>, tau: f64) {
        assert_eq!(self.sizes, other.sizes, "polyak update between different shapes");
        for (t, s) in self.params.iter_mut().zip(&other.params) {
            *t = F::of(tau * s.f64() + (1.0 - tau) * t.f64());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
