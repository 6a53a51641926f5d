use serde::{Deserialize, Serialize};

/// Penalized full-batch logistic regression, one independent problem per label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    /// Ridge penalty `l2/2·‖w‖²` on the standardized-feature weights, added to
    /// the mean loss; the bias is unpenalized.
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2: 1e-3,
            max_iterations: 2000,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    /// `dim × label_dim`, row-major, matching the global weight layout.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus ridge penalty of one label's fit.
pub fn logistic_objective(features: &[f64], dim: usize, targets: &[bool], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = targets.len();
    let mut total = 0.0;
    for i in 0..n {
        let z = b + features[i * dim..(i + 1) * dim].iter().zip(w).map(|(x, w)| x * w).sum::<f64>();
        total += if targets[i] { log1pexp(-z) } else { log1pexp(z) };
    }
    total / n as f64 + 0.5 * l2 * w.iter().map(|x| x * x).sum::<f64>()
}

/// Fit each label's weights on `features` (`n × dim`, row-major) and
/// `targets` (`n × label_dim`, row-major). Features are standardized
/// internally and the coefficients mapped back, so the returned fit applies
/// to raw features.
pub fn fit_logistic(features: &[f64], dim: usize, targets: &[bool], label_dim: usize, options: &LogisticOptions) -> LogisticFit {
    let n = if dim == 0 { targets.len() / label_dim.max(1) } else { features.len() / dim };
    let mut fit = LogisticFit {
        weights: vec![0.0; dim * label_dim],
        bias: vec![0.0; label_dim],
    };
    if n == 0 {
        return fit;
    }
    let mut mean = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    for i in 0..n {
        for k in 0..dim {
            mean[k] += features[i * dim + k] / n as f64;
        }
    }
    for i in 0..n {
        for k in 0..dim {
            scale[k] += (features[i * dim + k] - mean[k]).powi(2) / n as f64;
        }
    }
    scale.iter_mut().for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });
    let z: Vec<f64> = (0..n * dim).map(|i| (features[i] - mean[i % dim]) / scale[i % dim]).collect();
    // standardized rows have mean squared norm ≤ dim, so this step is below
    // the inverse curvature bound
    let step = 1.0 / (0.25 * (dim as f64 + 1.0) + options.l2);
    for j in 0..label_dim {
        let y: Vec<bool> = (0..n).map(|i| targets[i * label_dim + j]).collect();
        let (w, b) = nesterov(&z, dim, &y, options, step);
        let mut shift = 0.0;
        for k in 0..dim {
            fit.weights[k * label_dim + j] = w[k] / scale[k];
            shift += w[k] * mean[k] / scale[k];
        }
        fit.bias[j] = b - shift;
    }
    fit
}

fn gradient(z: &[f64], dim: usize, y: &[bool], w: &[f64], b: f64, l2: f64, gw: &mut [f64]) -> f64 {
    let n = y.len();
    gw.iter_mut().for_each(|g| *g = 0.0);
    let mut gb = 0.0;
    for i in 0..n {
        let row = &z[i * dim..(i + 1) * dim];
        let s = b + row.iter().zip(w).map(|(x, w)| x * w).sum::<f64>();
        let r = (crate::model::sigmoid(s) - if y[i] { 1.0 } else { 0.0 }) / n as f64;
        gb += r;
        for k in 0..dim {
            gw[k] += r * row[k];
        }
    }
    for k in 0..dim {
        gw[k] += l2 * w[k];
    }
    gb
}

fn nesterov(z: &[f64], dim: usize, y: &[bool], options: &LogisticOptions, step: f64) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut w_prev = w.clone();
    let mut b_prev = b;
    let mut look = w.clone();
    let mut gw = vec![0.0; dim];
    for t in 0..options.max_iterations {
        let m = t as f64 / (t as f64 + 3.0);
        for k in 0..dim {
            look[k] = w[k] + m * (w[k] - w_prev[k]);
        }
        let b_look = b + m * (b - b_prev);
        let gb = gradient(z, dim, y, &look, b_look, options.l2, &mut gw);
        let norm = (gb * gb + gw.iter().map(|g| g * g).sum::<f64>()).sqrt();
        w_prev.copy_from_slice(&w);
        b_prev = b;
        for k in 0..dim {
            w[k] = look[k] - step * gw[k];
        }
        b = b_look - step * gb;
        if norm < options.tolerance {
            break;
        }
    }
    (w, b)
}
