//! Adam updates and finite-difference gradient checking over flat parameter
//! tensors.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A model's trainable tensors, exposed as flat slices in a fixed order.
/// Gradients use the same type.
pub trait ParamSet: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Shared by the veracity and rumour trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 100, lr: 1e-3, seed: 0, batch_size: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new<P: ParamSet>(config: AdamConfig, params: &P) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Adam {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates_checked: usize,
    /// (tensor index, offset, analytic, numeric) of the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss` on sampled
/// coordinates. Every tensor contributes at least `min(len, 10)` samples
/// and the total is at least `samples`.
pub fn check_gradients<P: ParamSet>(
    params: &P,
    analytic: &P,
    loss: impl Fn(&P) -> f64,
    samples: usize,
    step: f64,
    seed: u64,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let total: usize = lens.iter().sum();
    let analytic_t = analytic.tensors();
    let mut probe = params.clone();
    let mut report = GradCheckReport { max_relative_error: 0.0, coordinates_checked: 0, worst: None };
    for (ti, &len) in lens.iter().enumerate() {
        if len == 0 {
            continue;
        }
        let share = (samples * len).div_ceil(total.max(1));
        let count = share.max(len.min(10)).min(len);
        for offset in sample(&mut rng, len, count).into_iter() {
            let original = probe.tensors()[ti][offset];
            probe.tensors_mut()[ti][offset] = original + step;
            let up = loss(&probe);
            probe.tensors_mut()[ti][offset] = original - step;
            let down = loss(&probe);
            probe.tensors_mut()[ti][offset] = original;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic_t[ti][offset];
            let err = relative_error(a, numeric);
            report.coordinates_checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((ti, offset, a, numeric));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Quad {
        w: Vec<f64>,
    }

    impl ParamSet for Quad {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.w]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.w]
        }
    }

    fn loss(p: &Quad) -> f64 {
        p.w.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * (x - 1.0).powi(2)).sum()
    }

    fn grad(p: &Quad) -> Quad {
        Quad { w: p.w.iter().enumerate().map(|(i, x)| 2.0 * (i as f64 + 1.0) * (x - 1.0)).collect() }
    }

    #[test]
    fn adam_minimises_quadratic() {
        let mut p = Quad { w: vec![5.0, -3.0, 0.0] };
        let mut opt = Adam::new(AdamConfig { lr: 0.05, ..Default::default() }, &p);
        for _ in 0..2000 {
            let g = grad(&p);
            opt.step(&mut p, &g);
        }
        assert!(loss(&p) < 1e-6, "{}", loss(&p));
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut p = Quad { w: vec![5.0, -3.0] };
        let before = p.clone();
        let mut opt = Adam::new(AdamConfig { lr: 0.0, ..Default::default() }, &p);
        let g = grad(&p);
        opt.step(&mut p, &g);
        assert_eq!(p, before);
    }

    #[test]
    fn gradcheck_detects_errors() {
        let p = Quad { w: vec![0.3, -1.2, 2.0, 0.7] };
        let good = check_gradients(&p, &grad(&p), loss, 4, 1e-5, 0);
        assert!(good.max_relative_error < 1e-6);
        assert_eq!(good.coordinates_checked, 4);
        let mut bad = grad(&p);
        bad.w[2] *= 1.5;
        assert!(check_gradients(&p, &bad, loss, 4, 1e-5, 0).max_relative_error > 1e-2);
    }
}
