use crate::features::FeatureMatrix;

/// Training matrix: row-major values (NaN = missing) plus, per feature, the
/// non-missing rows presorted by value and the missing rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    n_rows: usize,
    n_features: usize,
    values: Vec<f64>,
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Self {
        let n_features = names.len();
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for r in rows {
            assert_eq!(r.len(), n_features, "row width must match names");
            values.extend_from_slice(r);
        }
        Self::from_values(names, rows.len(), values)
    }

    pub fn from_matrix(m: &FeatureMatrix) -> Self {
        let mut values = Vec::with_capacity(m.n_rows() * m.n_cols());
        for i in 0..m.n_rows() {
            values.extend_from_slice(m.row(i));
        }
        Self::from_values(m.names.clone(), m.n_rows(), values)
    }

    /// Rows `rows` in the given order, re-sorted.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self::from_values(self.names.clone(), rows.len(), values)
    }

    fn from_values(names: Vec<String>, n_rows: usize, values: Vec<f64>) -> Self {
        let n_features = names.len();
        let mut sorted = Vec::with_capacity(n_features);
        let mut missing = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let v = |r: u32| values[r as usize * n_features + f];
            let (mut present, absent): (Vec<u32>, Vec<u32>) = (0..n_rows as u32).partition(|&r| !v(r).is_nan());
            present.sort_by(|&a, &b| v(a).total_cmp(&v(b)).then(a.cmp(&b)));
            sorted.push(present);
            missing.push(absent);
        }
        Self {
            names,
            n_rows,
            n_features,
            values,
            sorted,
            missing,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, f: usize) -> f64 {
        self.values[i * self.n_features + f]
    }

    pub(crate) fn sorted(&self, f: usize) -> &[u32] {
        &self.sorted[f]
    }

    pub(crate) fn missing(&self, f: usize) -> &[u32] {
        &self.missing[f]
    }
}
