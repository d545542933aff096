//! Pseudo-prototypical proxy loss.
//!
//! Every instance in a processing batch pulls toward an attractor set (its
//! class prototype plus the other same-class batch members acting as
//! pseudo-prototypes) and pushes every other-class instance away through a
//! repellor set (the prototype and the instance's own feature). Class
//! membership probabilities are temperature-scaled cosine softmaxes against
//! the stored prototypes.
//!
//! Stored prototypes are constants here: they evolve only through the
//! momentum rule in the memory module. Pseudo-prototypes are live batch
//! features, so gradient flows through them.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, Matrix};

/// Probabilities this close to 1 are clamped before `log(1 - p)`.
const ONE_MINUS_EPS: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// Softmax temperature; smaller values concentrate the distribution.
    pub temperature: f64,
    /// Use same-class batch members as extra class proxies.
    pub include_pseudo_prototypes: bool,
    /// Keep the attractor (positive) term.
    pub attractor_enabled: bool,
    /// Keep the repellor (negative) term.
    pub repellor_enabled: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            include_pseudo_prototypes: true,
            attractor_enabled: true,
            repellor_enabled: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// A batch of latent features with labels and a read-only view of the
/// current prototypes (one per observed class).
pub struct LabeledFeatures<'a> {
    pub features: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub prototypes: &'a BTreeMap<usize, Array1<f64>>,
}

impl<'a> LabeledFeatures<'a> {
    pub fn new(
        features: ArrayView2<'a, f64>,
        labels: &'a [usize],
        prototypes: &'a BTreeMap<usize, Array1<f64>>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        for &y in labels {
            if !prototypes.contains_key(&y) {
                return Err(Error::UnknownClass(y));
            }
        }
        Ok(Self {
            features,
            labels,
            prototypes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Membership probability of class `c` for feature `f` with proxy `proxy`
/// standing in for the class mean: a temperature-scaled softmax whose
/// denominator adds the stored prototypes of every other class.
pub fn class_prob(
    f: ArrayView1<'_, f64>,
    proxy: ArrayView1<'_, f64>,
    prototypes: &BTreeMap<usize, Array1<f64>>,
    c: usize,
    temperature: f64,
) -> Result<f64> {
    if !prototypes.contains_key(&c) {
        return Err(Error::UnknownClass(c));
    }
    let l0 = f.dot(&proxy) / temperature;
    let mut max = l0;
    let mut others = Vec::with_capacity(prototypes.len().saturating_sub(1));
    for (&k, p) in prototypes {
        if k == c {
            continue;
        }
        let l = f.dot(p) / temperature;
        max = max.max(l);
        others.push(l);
    }
    let e0 = (l0 - max).exp();
    let denom: f64 = e0 + others.iter().map(|l| (l - max).exp()).sum::<f64>();
    Ok(e0 / denom)
}

/// Expected attractor probability for instance `i`: the uniform average of
/// [`class_prob`] over the prototype and (when enabled) the other
/// same-class batch members.
pub fn attractor_prob(i: usize, batch: &LabeledFeatures<'_>, cfg: &LossConfig) -> Result<f64> {
    let c = batch.labels[i];
    let f_i = batch.features.row(i);
    let proto = &batch.prototypes[&c];
    let mut total = class_prob(f_i, proto.view(), batch.prototypes, c, cfg.temperature)?;
    let mut count = 1usize;
    if cfg.include_pseudo_prototypes {
        for (j, &y) in batch.labels.iter().enumerate() {
            if j != i && y == c {
                total += class_prob(
                    f_i,
                    batch.features.row(j),
                    batch.prototypes,
                    c,
                    cfg.temperature,
                )?;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// Expected repellor probability that instance `j` (of a different class)
/// is recognized as `i`'s class: averaged over the prototype and (when
/// enabled) `i`'s own feature.
pub fn repellor_prob(
    i: usize,
    j: usize,
    batch: &LabeledFeatures<'_>,
    cfg: &LossConfig,
) -> Result<f64> {
    let c = batch.labels[i];
    if batch.labels[j] == c {
        return Err(Error::SameClassPair(c));
    }
    let f_j = batch.features.row(j);
    let proto = &batch.prototypes[&c];
    let mut total = class_prob(f_j, proto.view(), batch.prototypes, c, cfg.temperature)?;
    let mut count = 1usize;
    if cfg.include_pseudo_prototypes {
        total += class_prob(
            f_j,
            batch.features.row(i),
            batch.prototypes,
            c,
            cfg.temperature,
        )?;
        count += 1;
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone)]
pub struct PppLoss {
    pub loss: f64,
    /// Attractor (positive) part of the loss.
    pub pos: f64,
    /// Repellor (negative) part of the loss.
    pub neg: f64,
    /// Gradient with respect to the batch features.
    pub d_features: Matrix,
}

struct SoftmaxTables {
    /// Logits against the stored prototypes, (n x k).
    lp: Array2<f64>,
    /// Pairwise feature logits, (n x n).
    lf: Array2<f64>,
    /// Per-row max of `lp`.
    row_max: Vec<f64>,
    /// exp(lp - row_max), per row.
    exp_lp: Array2<f64>,
    /// Row sums of `exp_lp`.
    row_sum: Vec<f64>,
    /// Prototype column index of each instance's label.
    label_col: Vec<usize>,
}

struct HVal {
    h: f64,
    /// exp(row_max - m) where m stabilizes this particular softmax.
    scale: f64,
    denom: f64,
}

impl SoftmaxTables {
    fn build(batch: &LabeledFeatures<'_>, temperature: f64) -> Self {
        let n = batch.len();
        let class_ids: Vec<usize> = batch.prototypes.keys().copied().collect();
        let k = class_ids.len();
        let d = batch.features.ncols();
        let mut protos = Array2::<f64>::zeros((k, d));
        for (row, id) in class_ids.iter().enumerate() {
            protos.row_mut(row).assign(&batch.prototypes[id]);
        }
        let lp = batch.features.dot(&protos.t()) / temperature;
        let lf = batch.features.dot(&batch.features.t()) / temperature;
        let row_max: Vec<f64> = lp
            .rows()
            .into_iter()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut exp_lp = lp.clone();
        for (mut row, &m) in exp_lp.rows_mut().into_iter().zip(&row_max) {
            row.mapv_inplace(|l| (l - m).exp());
        }
        let row_sum: Vec<f64> = exp_lp.rows().into_iter().map(|r| r.sum()).collect();
        let label_col: Vec<usize> = batch
            .labels
            .iter()
            .map(|y| class_ids.binary_search(y).expect("validated label"))
            .collect();
        let _ = n;
        Self {
            lp,
            lf,
            row_max,
            exp_lp,
            row_sum,
            label_col,
        }
    }

    /// Stabilized softmax of proxy logit `l0` for row `r` against every
    /// other class's prototype (class column `c_col` excluded).
    fn h_val(&self, r: usize, c_col: usize, l0: f64) -> HVal {
        let m = self.row_max[r].max(l0);
        let scale = (self.row_max[r] - m).exp();
        let e0 = (l0 - m).exp();
        let denom = e0 + (self.row_sum[r] - self.exp_lp[(r, c_col)]) * scale;
        HVal {
            h: e0 / denom,
            scale,
            denom,
        }
    }

    /// Accumulate `coeff * dh/d(lp[r][k])` for all prototype logits k != c.
    fn scatter_protos(&self, r: usize, c_col: usize, hv: &HVal, coeff: f64, d_lp: &mut Array2<f64>) {
        let s = coeff * hv.h * hv.scale / hv.denom;
        let exp_row = self.exp_lp.row(r);
        let mut grad_row = d_lp.row_mut(r);
        grad_row.scaled_add(-s, &exp_row);
        grad_row[c_col] += s * exp_row[c_col];
    }
}

/// Loss and feature gradient over one processing batch.
pub fn ppp_loss(batch: &LabeledFeatures<'_>, cfg: &LossConfig) -> Result<PppLoss> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::ShapeMismatch("ppp_loss on an empty batch".into()));
    }
    let n = batch.len();
    let k = batch.prototypes.len();
    let tables = SoftmaxTables::build(batch, cfg.temperature);
    let mut d_lp = Array2::<f64>::zeros((n, k));
    let mut d_lf = Array2::<f64>::zeros((n, n));
    let inv_b = 1.0 / n as f64;
    let mut pos = 0.0;
    let mut neg = 0.0;

    if cfg.attractor_enabled {
        // Reused per instance: (proxy row j or usize::MAX for the prototype, h).
        let mut proxies: Vec<(usize, HVal)> = Vec::new();
        for i in 0..n {
            let c_col = tables.label_col[i];
            proxies.clear();
            proxies.push((usize::MAX, tables.h_val(i, c_col, tables.lp[(i, c_col)])));
            if cfg.include_pseudo_prototypes {
                for j in 0..n {
                    if j != i && tables.label_col[j] == c_col {
                        proxies.push((j, tables.h_val(i, c_col, tables.lf[(i, j)])));
                    }
                }
            }
            let avg = proxies.iter().map(|(_, hv)| hv.h).sum::<f64>() / proxies.len() as f64;
            pos -= inv_b * avg.ln();
            let coeff = -inv_b / (avg * proxies.len() as f64);
            for (j, hv) in &proxies {
                let dl0 = coeff * hv.h * (1.0 - hv.h);
                if *j == usize::MAX {
                    d_lp[(i, c_col)] += dl0;
                } else {
                    d_lf[(i, *j)] += dl0;
                }
                tables.scatter_protos(i, c_col, hv, coeff, &mut d_lp);
            }
        }
    }

    if cfg.repellor_enabled {
        for i in 0..n {
            let c_col = tables.label_col[i];
            for j in 0..n {
                if tables.label_col[j] == c_col {
                    continue;
                }
                let h_proto = tables.h_val(j, c_col, tables.lp[(j, c_col)]);
                let h_pseudo = cfg
                    .include_pseudo_prototypes
                    .then(|| tables.h_val(j, c_col, tables.lf[(j, i)]));
                let count = 1 + h_pseudo.is_some() as usize;
                let raw =
                    (h_proto.h + h_pseudo.as_ref().map_or(0.0, |hv| hv.h)) / count as f64;
                let clamped = raw.min(ONE_MINUS_EPS);
                neg -= inv_b * (1.0 - clamped).ln();
                // In the clamped (flat) region the loss no longer depends on r.
                let coeff = if raw > ONE_MINUS_EPS {
                    0.0
                } else {
                    inv_b / ((1.0 - clamped) * count as f64)
                };
                d_lp[(j, c_col)] += coeff * h_proto.h * (1.0 - h_proto.h);
                tables.scatter_protos(j, c_col, &h_proto, coeff, &mut d_lp);
                if let Some(hv) = h_pseudo {
                    d_lf[(j, i)] += coeff * hv.h * (1.0 - hv.h);
                    tables.scatter_protos(j, c_col, &hv, coeff, &mut d_lp);
                }
            }
        }
    }

    // lp = F Pᵀ / τ and lf = F Fᵀ / τ, so the chain rule back to features is
    // two matrix products.
    let class_ids: Vec<usize> = batch.prototypes.keys().copied().collect();
    let d = batch.features.ncols();
    let mut protos = Array2::<f64>::zeros((k, d));
    for (row, id) in class_ids.iter().enumerate() {
        protos.row_mut(row).assign(&batch.prototypes[id]);
    }
    let d_features =
        (d_lp.dot(&protos) + (&d_lf).dot(&batch.features)) / cfg.temperature; // PROBE: detached proxies

    let loss = pos + neg;
    ensure_finite("ppp_loss", [&loss, &pos, &neg])?;
    debug_assert!(d_features.iter().all(|g| g.is_finite()));
    Ok(PppLoss {
        loss,
        pos,
        neg,
        d_features,
    })
}

/// Fraction of the loss carried by the attractor term, in [0, 1];
/// 0.5 when the total loss is zero.
pub fn loss_term_split(batch: &LabeledFeatures<'_>, cfg: &LossConfig) -> Result<f64> {
    let out = ppp_loss(batch, cfg)?;
    let total = out.pos + out.neg;
    if total == 0.0 {
        Ok(0.5)
    } else {
        Ok(out.pos / total)
    }
}

/// Softmax cross-entropy over a linear head's logits. Labels index head
/// outputs directly. Returns the mean loss and the gradient w.r.t. logits.
pub fn cross_entropy_loss(
    logits: ArrayView2<'_, f64>,
    labels: &[usize],
) -> Result<(f64, Matrix)> {
    let (n, k) = logits.dim();
    if n != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit rows vs {} labels",
            n,
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::ShapeMismatch("cross_entropy on an empty batch".into()));
    }
    for &y in labels {
        if y >= k {
            return Err(Error::UnknownClass(y));
        }
    }
    let mut loss = 0.0;
    let mut grads = Matrix::zeros((n, k));
    let inv_n = 1.0 / n as f64;
    for (i, (row, &y)) in logits.rows().into_iter().zip(labels).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Array1<f64> = row.mapv(|l| (l - max).exp());
        let denom = exps.sum();
        loss -= ((row[y] - max) - denom.ln()) * inv_n;
        let mut g = grads.row_mut(i);
        g.assign(&(exps * (inv_n / denom)));
        g[y] -= inv_n;
    }
    ensure_finite("cross_entropy_loss", [&loss])?;
    Ok((loss, grads))
}
