use nalgebra::{DMatrix, Dyn, Cholesky};
use ndarray::Array2;

use crate::nn::mlp::{Mlp, Real, Tape};
use crate::{Error, Result};

pub const KFAC_DECAY: f64 = 0.95;
pub const KFAC_DAMPING: f64 = 1e-3;
const MAX_DAMPING_RETRIES: usize = 5;

/// Kronecker-factored natural-gradient optimiser for an [`Mlp`].
///
/// For each layer it keeps running averages of `A = E[ã ãᵀ]` over the layer
/// input with a trailing 1 for the bias, and `G = E[g gᵀ]` over per-sample
/// gradients of the log-likelihood with respect to the layer's
/// pre-activation.
#[derive(Debug, Clone)]
pub struct Kfac {
    pub lr: f64,
    /// Bound on the predicted KL change of one step.
    pub kl_clip: f64,
    pub damping: f64,
    pub decay: f64,
    a: Vec<DMatrix<f64>>,
    g: Vec<DMatrix<f64>>,
    updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfacStep {
    /// Trust-region factor in (0, 1] applied on top of the learning rate.
    pub scale: f64,
    /// `η²·Σ⟨Δ, ∇⟩`, the quadratic KL prediction of the unscaled step.
    pub predicted: f64,
}

fn cholesky_damped(m: &DMatrix<f64>, mut damp: f64, layer: usize) -> Result<Cholesky<f64, Dyn>> {
    for _ in 0..=MAX_DAMPING_RETRIES {
        let mut d = m.clone();
        for i in 0..d.nrows() {
            d[(i, i)] += damp;
        }
        if let Some(c) = Cholesky::new(d) {
            return Ok(c);
        }
        damp = if damp > 0.0 { damp * 2.0 } else { 1e-8 };
    }
    Err(Error::NotPositiveDefinite(layer))
}

impl Kfac {
    pub fn new<F: Real>(net: &Mlp<F>, lr: f64, kl_clip: f64) -> Self {
        let sizes = net.sizes();
        Self {
            lr,
            kl_clip,
            damping: KFAC_DAMPING,
            decay: KFAC_DECAY,
            a: sizes.windows(2).map(|w| DMatrix::identity(w[0] + 1, w[0] + 1)).collect(),
            g: sizes.windows(2).map(|w| DMatrix::identity(w[1], w[1])).collect(),
            updates: 0,
        }
    }

    pub fn factors(&self, layer: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.a[layer], &self.g[layer])
    }

    pub fn set_factors(&mut self, layer: usize, a: DMatrix<f64>, g: DMatrix<f64>) {
        assert_eq!(a.shape(), self.a[layer].shape());
        assert_eq!(g.shape(), self.g[layer].shape());
        self.a[layer] = a;
        self.g[layer] = g;
    }

    /// Folds batch statistics into the running factors; the first batch
    /// replaces the identity initialisation.
    pub fn update_stats<F: Real>(&mut self, tape: &Tape<F>, deltas: &[Array2<F>]) {
        let n_layers = self.a.len();
        assert_eq!(deltas.len(), n_layers, "one delta matrix per layer");
        let w = if self.updates == 0 { 1.0 } else { 1.0 - self.decay };
        for l in 0..n_layers {
            let x = &tape.layers[l];
            let rows = x.nrows().max(1) as f64;
            let mut ah = DMatrix::<f64>::zeros(x.ncols() + 1, x.nrows());
            for (r, row) in x.rows().into_iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    ah[(c, r)] = v.f64();
                }
                ah[(x.ncols(), r)] = 1.0;
            }
            let a_hat = &ah * ah.transpose() / rows;
            let d = &deltas[l];
            let dm = DMatrix::<f64>::from_fn(d.ncols(), d.nrows(), |c, r| d[[r, c]].f64());
            let g_hat = &dm * dm.transpose() / rows;
            self.a[l] = &self.a[l] * (1.0 - w) + a_hat * w;
            self.g[l] = &self.g[l] * (1.0 - w) + g_hat * w;
        }
        self.updates += 1;
    }

    /// `(A + π·d·I)⁻¹ · ∇ · (G + d/π·I)⁻¹` for every layer, in parameter layout.
    pub fn natural_gradient<F: Real>(&self, net: &Mlp<F>, grads: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(grads.len(), net.params().len(), "gradient length mismatch");
        let sizes = net.sizes();
        let mut out = vec![0.0; grads.len()];
        for l in 0..self.a.len() {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let off = net.layer_offset(l);
            let gm = DMatrix::<f64>::from_fn(i + 1, o, |r, c| {
                if r < i {
                    grads[off + r * o + c]
                } else {
                    grads[off + i * o + c]
                }
            });
            let (a, g) = (&self.a[l], &self.g[l]);
            let ta = a.trace() / a.nrows() as f64;
            let tg = g.trace() / g.nrows() as f64;
            let pi = if ta > 0.0 && tg > 0.0 { (ta / tg).sqrt() } else { 1.0 };
            let ca = cholesky_damped(a, pi * self.damping, l)?;
            let cg = cholesky_damped(g, self.damping / pi, l)?;
            let x = ca.solve(&gm);
            let nat = cg.solve(&x.transpose()).transpose();
            for r in 0..i {
                for c in 0..o {
                    out[off + r * o + c] = nat[(r, c)];
                }
            }
            for c in 0..o {
                out[off + i * o + c] = nat[(i, c)];
            }
        }
        Ok(out)
    }

    /// Descends along the natural gradient with the KL-clipped step size.
    pub fn step<F: Real>(&mut self, net: &mut Mlp<F>, grads: &[f64]) -> Result<KfacStep> {
        let nat = self.natural_gradient(net, grads)?;
        let inner: f64 = nat.iter().zip(grads).map(|(a, b)| a * b).sum();
        let predicted = self.lr * self.lr * inner;
        let scale = if predicted > 0.0 { (2.0 * self.kl_clip / predicted).sqrt().min(1.0) } else { 1.0 };
        for (p, d) in net.params_mut().iter_mut().zip(&nat) {
            *p = F::of(p.f64() - self.lr * scale * d);
        }
        Ok(KfacStep { scale, predicted })
    }
}
