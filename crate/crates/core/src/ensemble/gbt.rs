//! Exact greedy gradient-boosted trees.
//!
//! Trees grow level by level over presorted feature columns. A split's gain
//! is G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ) and a leaf's value −G/(H+λ);
//! with squared error and λ = 0 this is plain variance reduction. Missing
//! values follow a learned default direction. Thresholds are midpoints
//! between consecutive distinct values; ties go to the lowest feature index,
//! then the lowest threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, EnsembleError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub max_depth: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    /// L2 leaf regularization.
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            rounds: 100,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            subsample: 1.0,
            lambda: 0.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let ok = self.max_depth >= 1
            && self.rounds >= 1
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && self.min_child_weight >= 0.0
            && self.subsample > 0.0
            && self.subsample <= 1.0
            && self.lambda >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(EnsembleError::BadParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    SquaredError,
    Softmax { n_classes: usize },
}

impl Objective {
    pub fn outputs(&self) -> usize {
        match self {
            Objective::SquaredError => 1,
            Objective::Softmax { n_classes } => *n_classes,
        }
    }
}

/// Tree node; `f < 0` marks a leaf whose value is `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub f: i32,
    pub t: f64,
    pub l: u32,
    pub r: u32,
    /// Missing values go left.
    pub d: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut n = &self.nodes[0];
        while n.f >= 0 {
            let x = row[n.f as usize];
            let left = if x.is_nan() { n.d } else { x < n.t };
            n = &self.nodes[if left { n.l } else { n.r } as usize];
        }
        n.t
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.f < 0 {
                0
            } else {
                1 + go(t, n.l as usize).max(go(t, n.r as usize))
            }
        }
        go(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.f < 0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub objective: Objective,
    pub n_features: usize,
    pub learning_rate: f64,
    pub base_score: Vec<f64>,
    /// Round-major: for softmax, round `r` class `k` is `trees[r * K + k]`.
    pub trees: Vec<Tree>,
}

impl GbtModel {
    /// Raw margins: base + η·Σ trees, one per output.
    pub fn predict_raw(&self, row: &[f64]) -> Vec<f64> {
        let k = self.objective.outputs();
        let mut out = self.base_score.clone();
        for (i, t) in self.trees.iter().enumerate() {
            out[i % k] += self.learning_rate * t.predict(row);
        }
        out
    }

    /// Regression value, or the argmax class index (lowest on ties) as f64.
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let raw = self.predict_raw(row);
        match self.objective {
            Objective::SquaredError => raw[0],
            Objective::Softmax { .. } => argmax(&raw) as f64,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.predict_raw(row))
    }

    pub fn rounds(&self) -> usize {
        self.trees.len() / self.objective.outputs()
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
    gl: f64,
    hl: f64,
}

/// Non-missing training rows of one feature in value order, with values.
struct Column {
    rows: Vec<u32>,
    vals: Vec<f64>,
    missing: Vec<u32>,
}

fn columns(ds: &Dataset, weights: &[f64]) -> Vec<Column> {
    (0..ds.n_features())
        .map(|f| {
            let rows: Vec<u32> = ds.sorted(f).iter().copied().filter(|&r| weights[r as usize] > 0.0).collect();
            let vals = rows.iter().map(|&r| ds.value(r as usize, f)).collect();
            let missing = ds.missing(f).iter().copied().filter(|&r| weights[r as usize] > 0.0).collect();
            Column { rows, vals, missing }
        })
        .collect()
}

/// Grows one tree on gradients `g`, hessians `h` over rows with `active`.
fn build_tree(ds: &Dataset, cols: &[Column], g: &[f64], h: &[f64], active: &[u32], p: &GbtParams) -> Tree {
    let n_rows = g.len();
    let mut nodes = vec![Node {
        f: -1,
        t: 0.0,
        l: 0,
        r: 0,
        d: false,
    }];
    let (g0, h0) = active.iter().fold((0.0, 0.0), |(a, b), &r| (a + g[r as usize], b + h[r as usize]));
    let mut sums = vec![(g0, h0)];
    let mut pos = vec![NONE; n_rows];
    for &r in active {
        pos[r as usize] = 0;
    }
    let mut open: Vec<u32> = vec![0];
    let lambda = p.lambda;
    let score = |g: f64, h: f64| if h + lambda > 0.0 { g * g / (h + lambda) } else { 0.0 };

    for _depth in 0..p.max_depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of = vec![NONE; nodes.len()];
        for (s, &nd) in open.iter().enumerate() {
            slot_of[nd as usize] = s as u32;
        }
        let k = open.len();
        let mut best: Vec<Option<Best>> = vec![None; k];
        let parent: Vec<f64> = open.iter().map(|&nd| score(sums[nd as usize].0, sums[nd as usize].1)).collect();
        let (mut gl, mut hl, mut gm, mut hm) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        let mut last = vec![f64::NAN; k];

        for (f, col) in cols.iter().enumerate() {
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            gm.iter_mut().for_each(|v| *v = 0.0);
            hm.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            for &r in &col.missing {
                let nd = pos[r as usize];
                if nd == NONE {
                    continue;
                }
                let s = slot_of[nd as usize] as usize;
                gm[s] += g[r as usize];
                hm[s] += h[r as usize];
            }
            for (&r, &x) in col.rows.iter().zip(&col.vals) {
                let nd = pos[r as usize];
                if nd == NONE {
                    continue;
                }
                let s = slot_of[nd as usize] as usize;
                if x > last[s] {
                    // candidate split between last[s] and x
                    let (gt, ht) = sums[open[s] as usize];
                    let mid = 0.5 * (last[s] + x);
                    let thr = if mid > last[s] { mid } else { x };
                    let mut consider = |gl_: f64, hl_: f64, default_left: bool| {
                        let (gr_, hr_) = (gt - gl_, ht - hl_);
                        if hl_ < p.min_child_weight || hr_ < p.min_child_weight || hl_ <= 0.0 || hr_ <= 0.0 {
                            return;
                        }
                        let gain = score(gl_, hl_) + score(gr_, hr_) - parent[s];
                        if gain > 1e-12 && best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Best {
                                gain,
                                feature: f,
                                threshold: thr,
                                default_left,
                                gl: gl_,
                                hl: hl_,
                            });
                        }
                    };
                    consider(gl[s], hl[s], false);
                    if hm[s] > 0.0 {
                        consider(gl[s] + gm[s], hl[s] + hm[s], true);
                    }
                }
                gl[s] += g[r as usize];
                hl[s] += h[r as usize];
                last[s] = x;
            }
        }

        let mut next_open = Vec::new();
        let mut split_of: Vec<Option<(usize, f64, bool, u32, u32)>> = vec![None; k];
        for s in 0..k {
            let Some(b) = best[s] else { continue };
            let nd = open[s] as usize;
            let (gt, ht) = sums[nd];
            let (l, r) = (nodes.len() as u32, nodes.len() as u32 + 1);
            for _ in 0..2 {
                nodes.push(Node {
                    f: -1,
                    t: 0.0,
                    l: 0,
                    r: 0,
                    d: false,
                });
            }
            sums.push((b.gl, b.hl));
            sums.push((gt - b.gl, ht - b.hl));
            nodes[nd] = Node {
                f: b.feature as i32,
                t: b.threshold,
                l,
                r,
                d: b.default_left,
            };
            split_of[s] = Some((b.feature, b.threshold, b.default_left, l, r));
            next_open.push(l);
            next_open.push(r);
        }
        for &r in active {
            let nd = pos[r as usize];
            if nd == NONE {
                continue;
            }
            pos[r as usize] = match split_of[slot_of[nd as usize] as usize] {
                Some((f, t, d, l, rr)) => {
                    let x = ds.value(r as usize, f);
                    let left = if x.is_nan() { d } else { x < t };
                    if left {
                        l
                    } else {
                        rr
                    }
                }
                None => NONE,
            };
        }
        open = next_open;
    }
    for (i, n) in nodes.iter_mut().enumerate() {
        if n.f < 0 {
            let (gs, hs) = sums[i];
            n.t = if hs + lambda > 0.0 { -gs / (hs + lambda) } else { 0.0 };
        }
    }
    Tree { nodes }
}

fn check_inputs(ds: &Dataset, y: &[f64], weights: &[f64], objective: &Objective) -> Result<(), EnsembleError> {
    if ds.n_rows() == 0 || !weights.iter().any(|&w| w > 0.0) {
        return Err(EnsembleError::EmptyData);
    }
    if y.len() != ds.n_rows() || weights.len() != ds.n_rows() {
        return Err(EnsembleError::LengthMismatch {
            rows: ds.n_rows(),
            targets: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(EnsembleError::NonFiniteTarget(i));
    }
    if let Objective::Softmax { n_classes } = objective {
        if *n_classes < 2 {
            return Err(EnsembleError::BadParams("softmax needs at least 2 classes".into()));
        }
        if let Some(i) = y.iter().position(|&v| v < 0.0 || v.fract() != 0.0 || v as usize >= *n_classes) {
            return Err(EnsembleError::BadLabel(i));
        }
    }
    Ok(())
}

/// Trains on all rows with unit weight.
pub fn train_gbt(ds: &Dataset, y: &[f64], params: &GbtParams, objective: Objective) -> Result<GbtModel, EnsembleError> {
    train_gbt_traced(ds, y, &vec![1.0; y.len()], params, objective, 0).map(|(m, _)| m)
}

/// Trains with per-row weights (bootstrap multiplicities; 0 = unused) and
/// returns the weighted training loss after each round (mean squared error
/// or mean cross-entropy). `seed` drives row subsampling.
pub fn train_gbt_traced(
    ds: &Dataset,
    y: &[f64],
    weights: &[f64],
    params: &GbtParams,
    objective: Objective,
    seed: u64,
) -> Result<(GbtModel, Vec<f64>), EnsembleError> {
    params.validate()?;
    check_inputs(ds, y, weights, &objective)?;
    let n = ds.n_rows();
    let k = objective.outputs();
    let cols = columns(ds, weights);
    let train: Vec<u32> = (0..n as u32).filter(|&r| weights[r as usize] > 0.0).collect();
    let wsum: f64 = train.iter().map(|&r| weights[r as usize]).sum();

    let base_score: Vec<f64> = match objective {
        Objective::SquaredError => vec![train.iter().map(|&r| weights[r as usize] * y[r as usize]).sum::<f64>() / wsum],
        Objective::Softmax { n_classes } => {
            let mut c = vec![0.0; n_classes];
            for &r in &train {
                c[y[r as usize] as usize] += weights[r as usize];
            }
            // smoothed log priors
            c.iter().map(|&v| ((v + 1.0) / (wsum + n_classes as f64)).ln()).collect()
        }
    };

    let mut margin: Vec<f64> = (0..n * k).map(|i| base_score[i % k]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(params.rounds * k);
    let mut losses = Vec::with_capacity(params.rounds);
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n]);

    for _round in 0..params.rounds {
        let active: Vec<u32> = if params.subsample < 1.0 {
            train.iter().copied().filter(|_| rng.gen::<f64>() < params.subsample).collect()
        } else {
            train.clone()
        };
        let probs: Vec<Vec<f64>> = match objective {
            Objective::SquaredError => Vec::new(),
            Objective::Softmax { .. } => train.iter().map(|&r| softmax(&margin[r as usize * k..(r as usize + 1) * k])).collect(),
        };
        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            for (t, &r) in train.iter().enumerate() {
                let (ri, w) = (r as usize, weights[r as usize]);
                match objective {
                    Objective::SquaredError => {
                        g[ri] = w * (margin[ri] - y[ri]);
                        h[ri] = w;
                    }
                    Objective::Softmax { .. } => {
                        let pk = probs[t][class];
                        let target = (y[ri] as usize == class) as u8 as f64;
                        g[ri] = w * (pk - target);
                        h[ri] = w * (pk * (1.0 - pk)).max(1e-16);
                    }
                }
            }
            round_trees.push(build_tree(ds, &cols, &g, &h, &active, params));
        }
        for &r in &train {
            let row = ds.row(r as usize);
            for (class, t) in round_trees.iter().enumerate() {
                margin[r as usize * k + class] += params.learning_rate * t.predict(row);
            }
        }
        trees.extend(round_trees);
        losses.push(loss(&objective, &margin, y, weights, &train, wsum));
    }
    Ok((
        GbtModel {
            objective,
            n_features: ds.n_features(),
            learning_rate: params.learning_rate,
            base_score,
            trees,
        },
        losses,
    ))
}

fn loss(objective: &Objective, margin: &[f64], y: &[f64], w: &[f64], rows: &[u32], wsum: f64) -> f64 {
    let k = objective.outputs();
    let total: f64 = rows
        .iter()
        .map(|&r| {
            let r = r as usize;
            match objective {
                Objective::SquaredError => w[r] * (margin[r] - y[r]).powi(2),
                Objective::Softmax { .. } => {
                    let p = softmax(&margin[r * k..(r + 1) * k]);
                    -w[r] * p[y[r] as usize].max(1e-300).ln()
                }
            }
        })
        .sum();
    total / wsum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn ds(rows: &[Vec<f64>]) -> Dataset {
        let names = (0..rows[0].len()).map(|i| format!("x{i}")).collect();
        Dataset::from_rows(names, rows)
    }

    fn rand_rows(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let y = rows.iter().map(|r| r[0] * r[0] + 2.0 * r[1].sin() + rng.gen_range(-0.5..0.5)).collect();
        (rows, y)
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let (rows, _) = rand_rows(1, 40, 3);
        let y = vec![7.5; 40];
        let m = train_gbt(&ds(&rows), &y, &GbtParams::default(), Objective::SquaredError).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        for r in &rows {
            assert_eq!(m.predict_value(r), 7.5);
        }
    }

    /// Exhaustive best stump by SSE reduction, midpoints, ties to the lowest
    /// feature then threshold.
    pub(crate) fn best_stump(rows: &[Vec<f64>], y: &[f64]) -> (usize, f64) {
        let sse = |idx: &[usize]| {
            if idx.is_empty() {
                return 0.0;
            }
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let all: Vec<usize> = (0..y.len()).collect();
        let total = sse(&all);
        let mut best = (f64::NEG_INFINITY, 0, 0.0);
        for f in 0..rows[0].len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f] < t);
                let gain = total - sse(&l) - sse(&r);
                if gain > best.0 + 1e-9 * total.max(1.0) {
                    best = (gain, f, t);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn stump_matches_exhaustive_search() {
        for seed in 0..20 {
            let (rows, y) = rand_rows(seed, 50, 4);
            let p = GbtParams {
                max_depth: 1,
                rounds: 1,
                learning_rate: 1.0,
                min_child_weight: 0.0,
                ..GbtParams::default()
            };
            let m = train_gbt(&ds(&rows), &y, &p, Objective::SquaredError).unwrap();
            let root = m.trees[0].nodes[0];
            assert_eq!((root.f as usize, root.t), best_stump(&rows, &y), "seed {seed}");
        }
    }

    #[test]
    fn xor_is_learned() {
        let mut rows = vec![];
        let mut y = vec![];
        for i in 0..100 {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            rows.push(vec![a + 0.01 * (i as f64 / 100.0), b]);
            y.push(((a as u8) ^ (b as u8)) as f64);
        }
        let p = GbtParams {
            max_depth: 2,
            rounds: 20,
            learning_rate: 0.5,
            lambda: 1.0,
            ..GbtParams::default()
        };
        let m = train_gbt(&ds(&rows), &y, &p, Objective::Softmax { n_classes: 2 }).unwrap();
        let acc = rows.iter().zip(&y).filter(|(r, t)| m.predict_value(r) == **t).count();
        assert_eq!(acc, 100);
    }

    #[test]
    fn missing_values_learn_direction() {
        // y is high exactly where x0 is missing
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![if i % 3 == 0 { f64::NAN } else { i as f64 }]).collect();
        let y: Vec<f64> = (0..60).map(|i| if i % 3 == 0 { 10.0 } else { 0.0 }).collect();
        let p = GbtParams {
            max_depth: 2,
            rounds: 30,
            learning_rate: 0.5,
            ..GbtParams::default()
        };
        let m = train_gbt(&ds(&rows), &y, &p, Objective::SquaredError).unwrap();
        assert!((m.predict_value(&[f64::NAN]) - 10.0).abs() < 0.1);
        assert!(m.predict_value(&[4.0]).abs() < 0.1);
    }

    #[test]
    fn input_errors() {
        let d = ds(&[vec![1.0], vec![2.0]]);
        let p = GbtParams::default();
        assert!(matches!(train_gbt(&d, &[1.0, f64::NAN], &p, Objective::SquaredError), Err(EnsembleError::NonFiniteTarget(1))));
        assert!(train_gbt(&d, &[1.0], &p, Objective::SquaredError).is_err());
        assert!(train_gbt(&d, &[0.0, 3.0], &p, Objective::Softmax { n_classes: 2 }).is_err());
        let bad = GbtParams { max_depth: 0, ..p };
        assert!(train_gbt(&d, &[1.0, 2.0], &bad, Objective::SquaredError).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn loss_never_increases(seed in 0u64..1000, depth in 1usize..6, lr in 0.05f64..1.0) {
            let (rows, y) = rand_rows(seed, 80, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..80).map(|_| rng.gen_range(0..3) as f64).collect();
            let p = GbtParams { max_depth: depth, rounds: 15, learning_rate: lr, ..GbtParams::default() };
            let (m, losses) = train_gbt_traced(&ds(&rows), &y, &w, &p, Objective::SquaredError, seed).unwrap();
            for pair in losses.windows(2) {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12);
            }
            prop_assert!(m.trees.iter().all(|t| t.depth() <= depth));
            prop_assert!(m.trees.iter().flat_map(|t| &t.nodes).all(|n| n.t.is_finite()));
        }
    }
}
