use serde::{Deserialize, Serialize};

use crate::graph::{LabelTable, Vertex};
use crate::model::ParamView;

/// How label probabilities become label sets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMode {
    /// Predict a label when its probability exceeds 1/2.
    #[default]
    Threshold,
    /// Predict the `k` most probable labels, `k` being the vertex's true label count.
    TopK,
}

/// Mean over labels of the per-label F1 on `test`. A label with zero
/// precision and recall scores 0.
pub fn macro_f1(predicted: &LabelTable, truth: &LabelTable, test: &[Vertex]) -> f64 {
    let l = truth.label_dim();
    if l == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..l {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for &v in test {
            match (predicted.get(v, j), truth.get(v, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp > 0 {
            total += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        }
    }
    total / l as f64
}

/// Logits `γᵀλ_v` for every label.
pub fn label_logits(params: &impl ParamView, embedding: &[f64]) -> Vec<f64> {
    (0..params.label_dim())
        .map(|j| params.bias(j) + embedding.iter().enumerate().map(|(k, x)| x * params.weight(k, j)).sum::<f64>())
        .collect()
}

/// Predicted label sets for `vertices`; rows of other vertices stay empty.
pub fn predict(params: &impl ParamView, vertices: &[Vertex], mode: PredictMode, truth: &LabelTable) -> LabelTable {
    let l = params.label_dim();
    let mut out = LabelTable::new(truth.vertex_count(), l);
    let mut emb = vec![0.0; params.dim()];
    for &v in vertices {
        params.read_vertex(v, &mut emb);
        let logits = label_logits(params, &emb);
        match mode {
            PredictMode::Threshold => {
                for (j, &z) in logits.iter().enumerate() {
                    out.set(v, j, z > 0.0);
                }
            }
            PredictMode::TopK => {
                let k = truth.row(v).iter().filter(|&&b| b).count();
                let mut order: Vec<usize> = (0..l).collect();
                order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
                for &j in &order[..k] {
                    out.set(v, j, true);
                }
            }
        }
    }
    out
}
