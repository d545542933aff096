//! Operational memory: momentum-updated class prototypes plus a
//! class-balanced reservoir replay buffer. Total replay capacity is
//! re-divided equally whenever a new class appears, which keeps every class
//! represented no matter how skewed the stream is.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::numerics::{l2_normalize, Matrix, Rng, Vector};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryConfig {
    /// Total replay capacity, shared equally by the observed classes.
    pub capacity: usize,
    /// Prototype momentum in [0, 1]; 1 freezes, 0 replaces.
    pub momentum: f64,
    /// Renormalize prototypes to unit length after every update.
    pub normalize_prototypes: bool,
    /// Count only stream arrivals toward the reservoir horizon instead of
    /// the full processing batch (textbook reservoir behavior).
    pub stream_only_counts: bool,
    pub latent_dim: usize,
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1], got {}",
                self.momentum
            )));
        }
        if self.latent_dim == 0 {
            return Err(Error::InvalidConfig("latent_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// One stored exemplar: the raw input (features go stale as the network
/// evolves) and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub input: Vector,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct ProtoMemory {
    config: MemoryConfig,
    /// Class ids in first-seen order; append-only.
    observed: Vec<usize>,
    prototypes: BTreeMap<usize, Vector>,
    exemplars: BTreeMap<usize, Vec<Exemplar>>,
    /// Observed-sample count per class (the reservoir horizon).
    counts: BTreeMap<usize, u64>,
    /// Current per-class capacity (capacity / number of observed classes).
    per_class_cap: usize,
}

impl ProtoMemory {
    pub fn new(config: MemoryConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            observed: Vec::new(),
            prototypes: BTreeMap::new(),
            exemplars: BTreeMap::new(),
            counts: BTreeMap::new(),
            per_class_cap: 0,
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    /// Class ids in the order they were first seen.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn is_observed(&self, y: usize) -> bool {
        self.prototypes.contains_key(&y)
    }

    pub fn prototypes(&self) -> &BTreeMap<usize, Vector> {
        &self.prototypes
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn per_class_cap(&self) -> usize {
        self.per_class_cap
    }

    pub fn exemplar_count(&self, y: usize) -> usize {
        self.exemplars.get(&y).map_or(0, Vec::len)
    }

    pub fn total_exemplars(&self) -> usize {
        self.exemplars.values().map(Vec::len).sum()
    }

    pub fn exemplars(&self) -> &BTreeMap<usize, Vec<Exemplar>> {
        &self.exemplars
    }

    /// Restore internal state from a snapshot.
    pub(crate) fn from_parts(
        config: MemoryConfig,
        observed: Vec<usize>,
        prototypes: BTreeMap<usize, Vector>,
        exemplars: BTreeMap<usize, Vec<Exemplar>>,
        counts: BTreeMap<usize, u64>,
    ) -> Result<Self> {
        config.validate()?;
        let per_class_cap = if observed.is_empty() {
            0
        } else {
            config.capacity / observed.len()
        };
        Ok(Self {
            config,
            observed,
            prototypes,
            exemplars,
            counts,
            per_class_cap,
        })
    }

    /// Register a new class: re-divide capacity over all observed classes,
    /// truncate every buffer to its first `m` exemplars, and draw a fresh
    /// unit prototype from strictly positive uniforms.
    pub fn init_class(&mut self, y: usize, rng: &mut Rng) -> Result<()> {
        if self.is_observed(y) {
            return Err(Error::DuplicateClass(y));
        }
        self.observed.push(y);
        self.counts.insert(y, 0);
        self.per_class_cap = self.config.capacity / self.observed.len();
        for buf in self.exemplars.values_mut() {
            buf.truncate(self.per_class_cap);
        }
        self.exemplars.insert(y, Vec::new());
        let raw = Vector::from_shape_fn(self.config.latent_dim, |_| rng.uniform_open());
        self.prototypes.insert(y, l2_normalize(raw.view())?);
        Ok(())
    }

    /// Momentum update of every prototype whose class occurs in the batch:
    /// `p <- alpha p + (1 - alpha) mean(features of that class)`, then
    /// renormalized when configured. Also advances the per-class sample
    /// counts (unless `stream_only_counts` moves that to `memory_update`).
    pub fn prototype_update(&mut self, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<()> {
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &y) in labels.iter().enumerate() {
            if !self.is_observed(y) {
                return Err(Error::UnknownClass(y));
            }
            by_class.entry(y).or_default().push(i);
        }
        let alpha = self.config.momentum;
        for (y, rows) in by_class {
            if !self.config.stream_only_counts {
                *self.counts.get_mut(&y).expect("observed") += rows.len() as u64;
            }
            let mut mean = Vector::zeros(features.ncols());
            for &r in &rows {
                mean += &features.row(r);
            }
            mean /= rows.len() as f64;
            let proto = self.prototypes.get_mut(&y).expect("observed");
            let updated = &*proto * alpha + &mean * (1.0 - alpha);
            *proto = if self.config.normalize_prototypes {
                l2_normalize(updated.view())?
            } else {
                updated
            };
        }
        Ok(())
    }

    /// Per-class reservoir over newly streamed samples only (replayed
    /// exemplars never re-enter). Below capacity a sample is always kept;
    /// at capacity it overwrites slot `j` when a uniform draw over the
    /// class horizon lands inside the buffer.
    pub fn memory_update(&mut self, inputs: ArrayView2<'_, f64>, labels: &[usize], rng: &mut Rng) -> Result<()> {
        if inputs.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} input rows vs {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        for (row, &y) in inputs.rows().into_iter().zip(labels) {
            if !self.is_observed(y) {
                return Err(Error::UnknownClass(y));
            }
            if self.config.stream_only_counts {
                *self.counts.get_mut(&y).expect("observed") += 1;
            }
            let cap = self.per_class_cap;
            let buf = self.exemplars.get_mut(&y).expect("observed");
            if buf.len() < cap {
                buf.push(Exemplar {
                    input: row.to_owned(),
                    label: y,
                });
            } else {
                let horizon = self.counts[&y];
                if horizon == 0 || buf.is_empty() {
                    continue;
                }
                let j = rng.uniform_int_inclusive(horizon);
                if (j as usize) <= buf.len() {
                    buf[j as usize - 1] = Exemplar {
                        input: row.to_owned(),
                        label: y,
                    };
                }
            }
        }
        Ok(())
    }

    /// Draw up to `k` exemplars uniformly from the union of all class
    /// buffers, without replacement; fewer come back when memory holds
    /// fewer.
    pub fn sample_replay(&self, k: usize, rng: &mut Rng) -> Vec<Exemplar> {
        let mut pool: Vec<(usize, usize)> = self
            .exemplars
            .iter()
            .flat_map(|(&y, buf)| (0..buf.len()).map(move |i| (y, i)))
            .collect();
        let take = k.min(pool.len());
        // Partial Fisher-Yates: the first `take` entries are a uniform
        // without-replacement sample.
        for i in 0..take {
            let j = i + rng.index(pool.len() - i);
            pool.swap(i, j);
        }
        pool[..take]
            .iter()
            .map(|&(y, i)| self.exemplars[&y][i].clone())
            .collect()
    }

    /// Nearest-prototype classification by cosine similarity; ties break
    /// toward the lowest class id.
    pub fn classify(&self, f: ArrayView1<'_, f64>) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (&y, p) in &self.prototypes {
            let sim = f.dot(p);
            match best {
                Some((_, s)) if sim <= s => {}
                _ => best = Some((y, sim)),
            }
        }
        best.map(|(y, _)| y).ok_or(Error::NoClasses)
    }

    /// Batch variant of [`ProtoMemory::classify`].
    pub fn classify_batch(&self, features: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if self.prototypes.is_empty() {
            return Err(Error::NoClasses);
        }
        let ids: Vec<usize> = self.prototypes.keys().copied().collect();
        let mut protos = Matrix::zeros((ids.len(), self.config.latent_dim));
        for (r, y) in ids.iter().enumerate() {
            protos.row_mut(r).assign(&self.prototypes[y]);
        }
        let sims = features.dot(&protos.t());
        Ok(sims
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0usize;
                for (i, &s) in row.iter().enumerate() {
                    if s > row[best] {
                        best = i;
                    }
                }
                ids[best]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Axis};

    fn config(capacity: usize, momentum: f64) -> MemoryConfig {
        MemoryConfig {
            capacity,
            momentum,
            normalize_prototypes: true,
            stream_only_counts: false,
            latent_dim: 2,
        }
    }

    fn row(v: [f64; 2]) -> Matrix {
        Matrix::from_shape_vec((1, 2), v.to_vec()).unwrap()
    }

    #[test]
    fn init_class_repartitions_capacity() {
        let mut mem = ProtoMemory::new(MemoryConfig {
            latent_dim: 2,
            ..config(300, 0.9)
        })
        .unwrap();
        let mut rng = Rng::from_seed(0);
        mem.init_class(0, &mut rng).unwrap();
        assert_eq!(mem.per_class_cap(), 300);
        mem.init_class(1, &mut rng).unwrap();
        assert_eq!(mem.per_class_cap(), 150);
        // Fill both classes to 150 each.
        for y in [0usize, 1] {
            for i in 0..150 {
                let x = row([i as f64, y as f64]);
                mem.prototype_update(x.view(), &[y]).unwrap();
                mem.memory_update(x.view(), &[y], &mut rng).unwrap();
            }
        }
        assert_eq!(mem.exemplar_count(0), 150);
        assert_eq!(mem.exemplar_count(1), 150);
        let first_hundred: Vec<Vector> = mem.exemplars()[&0][..100]
            .iter()
            .map(|e| e.input.clone())
            .collect();
        mem.init_class(2, &mut rng).unwrap();
        assert_eq!(mem.per_class_cap(), 100);
        assert_eq!(mem.exemplar_count(0), 100);
        assert_eq!(mem.exemplar_count(1), 100);
        assert_eq!(mem.exemplar_count(2), 0);
        // Truncation keeps the first m, in order.
        for (kept, expected) in mem.exemplars()[&0].iter().zip(&first_hundred) {
            assert_eq!(&kept.input, expected);
        }
    }

    #[test]
    fn first_class_prototype_is_positive_unit() {
        let mut mem = ProtoMemory::new(config(300, 0.9)).unwrap();
        let mut rng = Rng::from_seed(7);
        mem.init_class(4, &mut rng).unwrap();
        assert_eq!(mem.per_class_cap(), 300);
        let p = &mem.prototypes()[&4];
        assert_abs_diff_eq!(p.dot(p).sqrt(), 1.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let draw = |seed: u64| {
            let mut mem = ProtoMemory::new(config(10, 0.9)).unwrap();
            let mut rng = Rng::from_seed(seed).child("proto-init");
            mem.init_class(0, &mut rng).unwrap();
            mem.prototypes()[&0].clone()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn duplicate_class_errors() {
        let mut mem = ProtoMemory::new(config(10, 0.9)).unwrap();
        let mut rng = Rng::from_seed(1);
        mem.init_class(0, &mut rng).unwrap();
        assert!(matches!(
            mem.init_class(0, &mut rng),
            Err(Error::DuplicateClass(0))
        ));
    }

    #[test]
    fn momentum_extremes() {
        let mut rng = Rng::from_seed(3);
        // alpha = 1: direction unchanged.
        let mut frozen = ProtoMemory::new(config(10, 1.0)).unwrap();
        frozen.init_class(0, &mut rng).unwrap();
        let before = frozen.prototypes()[&0].clone();
        frozen
            .prototype_update(row([0.0, 1.0]).view(), &[0])
            .unwrap();
        let after = &frozen.prototypes()[&0];
        for (a, b) in before.iter().zip(after.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // alpha = 0 with normalization off: prototype becomes the feature.
        let mut replace = ProtoMemory::new(MemoryConfig {
            normalize_prototypes: false,
            ..config(10, 0.0)
        })
        .unwrap();
        replace.init_class(0, &mut rng).unwrap();
        replace
            .prototype_update(row([0.25, 0.5]).view(), &[0])
            .unwrap();
        assert_eq!(replace.prototypes()[&0], array![0.25, 0.5]);
    }

    #[test]
    fn momentum_hand_arithmetic() {
        // p = (1, 0), batch mean (0, 1), alpha 0.9:
        // pre-normalization (0.9, 0.1), normalized by sqrt(0.82).
        let mut mem = ProtoMemory::new(config(10, 0.9)).unwrap();
        let mut rng = Rng::from_seed(4);
        mem.init_class(0, &mut rng).unwrap();
        // Overwrite the random init deterministically through alpha = 0 path:
        // easier to just re-run the update math from a known prototype.
        let mut forced = mem.clone();
        {
            // alpha 0 + no normalization via a sibling memory to plant (1,0).
            let mut plant = ProtoMemory::new(MemoryConfig {
                normalize_prototypes: false,
                ..config(10, 0.0)
            })
            .unwrap();
            plant.init_class(0, &mut rng).unwrap();
            plant.prototype_update(row([1.0, 0.0]).view(), &[0]).unwrap();
            forced.prototypes.insert(0, plant.prototypes()[&0].clone());
        }
        forced
            .prototype_update(row([0.0, 1.0]).view(), &[0])
            .unwrap();
        let p = &forced.prototypes()[&0];
        let s = 0.82f64.sqrt();
        assert_abs_diff_eq!(p[0], 0.9 / s, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.1 / s, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.993883734673619, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.110431526074846, epsilon = 1e-12);
    }

    #[test]
    fn absent_classes_untouched_and_counts_advance() {
        let mut mem = ProtoMemory::new(config(10, 0.5)).unwrap();
        let mut rng = Rng::from_seed(5);
        mem.init_class(0, &mut rng).unwrap();
        mem.init_class(1, &mut rng).unwrap();
        let before = mem.prototypes()[&1].clone();
        let feats = Matrix::from_shape_vec((3, 2), vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        mem.prototype_update(feats.view(), &[0, 0, 0]).unwrap();
        assert_eq!(mem.prototypes()[&1], before);
        assert_eq!(mem.counts()[&0], 3);
        assert_eq!(mem.counts()[&1], 0);
    }

    #[test]
    fn unknown_class_in_batch_errors() {
        let mut mem = ProtoMemory::new(config(10, 0.5)).unwrap();
        let mut rng = Rng::from_seed(6);
        mem.init_class(0, &mut rng).unwrap();
        assert!(matches!(
            mem.prototype_update(row([1.0, 0.0]).view(), &[9]),
            Err(Error::UnknownClass(9))
        ));
        assert!(matches!(
            mem.memory_update(row([1.0, 0.0]).view(), &[9], &mut rng),
            Err(Error::UnknownClass(9))
        ));
    }

    #[test]
    fn below_capacity_always_stores() {
        let mut mem = ProtoMemory::new(config(5, 0.9)).unwrap();
        let mut rng = Rng::from_seed(8);
        mem.init_class(0, &mut rng).unwrap();
        for i in 0..5 {
            let x = row([i as f64, 0.0]);
            mem.prototype_update(x.view(), &[0]).unwrap();
            mem.memory_update(x.view(), &[0], &mut rng).unwrap();
            assert_eq!(mem.exemplar_count(0), i + 1);
        }
    }

    #[test]
    fn reservoir_retention_matches_m_over_n() {
        // Stream 100 singleton batches into a capacity-5 class; every sample
        // should be retained with probability ~5/100 across seeded trials.
        let trials = 10_000usize;
        let n = 100usize;
        let m = 5usize;
        let mut retained = vec![0u32; n];
        for seed in 0..trials as u64 {
            let mut mem = ProtoMemory::new(config(m, 0.9)).unwrap();
            let mut rng = Rng::from_seed(seed).child("reservoir");
            let mut proto_rng = Rng::from_seed(seed).child("proto-init");
            mem.init_class(0, &mut proto_rng).unwrap();
            for i in 0..n {
                let x = row([i as f64, 0.0]);
                mem.prototype_update(x.view(), &[0]).unwrap();
                mem.memory_update(x.view(), &[0], &mut rng).unwrap();
            }
            for e in &mem.exemplars()[&0] {
                retained[e.input[0] as usize] += 1;
            }
        }
        let expected = m as f64 / n as f64;
        for (i, &count) in retained.iter().enumerate() {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - expected).abs() <= 0.01,
                "sample {i}: retention {freq} vs expected {expected}"
            );
        }
    }

    #[test]
    fn replay_exemplars_do_not_reenter() {
        // memory_update is only ever called with stream samples; verify the
        // buffer is untouched by replay draws.
        let mut mem = ProtoMemory::new(config(4, 0.9)).unwrap();
        let mut rng = Rng::from_seed(9);
        mem.init_class(0, &mut rng).unwrap();
        for i in 0..4 {
            let x = row([i as f64, 0.0]);
            mem.prototype_update(x.view(), &[0]).unwrap();
            mem.memory_update(x.view(), &[0], &mut rng).unwrap();
        }
        let before: Vec<_> = mem.exemplars()[&0].to_vec();
        let mut replay_rng = Rng::from_seed(10);
        let _ = mem.sample_replay(3, &mut replay_rng);
        let _ = mem.sample_replay(4, &mut replay_rng);
        assert_eq!(mem.exemplars()[&0], before);
    }

    #[test]
    fn sample_replay_empty_and_full() {
        let mut mem = ProtoMemory::new(config(3, 0.9)).unwrap();
        let mut rng = Rng::from_seed(11);
        assert!(mem.sample_replay(5, &mut rng).is_empty());
        mem.init_class(0, &mut rng).unwrap();
        for i in 0..3 {
            let x = row([i as f64, 0.0]);
            mem.prototype_update(x.view(), &[0]).unwrap();
            mem.memory_update(x.view(), &[0], &mut rng).unwrap();
        }
        let got = mem.sample_replay(3, &mut rng);
        assert_eq!(got.len(), 3);
        let mut firsts: Vec<f64> = got.iter().map(|e| e.input[0]).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn sample_replay_is_uniform() {
        // 20 stored items, draws of 5: each item's frequency should sit
        // within 3 sigma of 1/4 over 10k seeded draws.
        let mut mem = ProtoMemory::new(MemoryConfig {
            latent_dim: 2,
            ..config(20, 0.9)
        })
        .unwrap();
        let mut rng = Rng::from_seed(12);
        mem.init_class(0, &mut rng).unwrap();
        for i in 0..20 {
            let x = row([i as f64, 0.0]);
            mem.prototype_update(x.view(), &[0]).unwrap();
            mem.memory_update(x.view(), &[0], &mut rng).unwrap();
        }
        let trials = 10_000usize;
        let k = 5usize;
        let mut hits = vec![0u32; 20];
        for seed in 0..trials as u64 {
            let mut draw_rng = Rng::from_seed(seed).child("replay");
            for e in mem.sample_replay(k, &mut draw_rng) {
                hits[e.input[0] as usize] += 1;
            }
        }
        let p = k as f64 / 20.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for (i, &h) in hits.iter().enumerate() {
            let freq = h as f64 / trials as f64;
            assert!(
                (freq - p).abs() < 3.0 * sigma + 0.005,
                "item {i}: freq {freq}, expected {p} +- {sigma}"
            );
        }
    }

    #[test]
    fn classify_basics() {
        let mut mem = ProtoMemory::new(config(10, 0.9)).unwrap();
        let mut rng = Rng::from_seed(13);
        let f = array![0.6, 0.8];
        assert!(matches!(mem.classify(f.view()), Err(Error::NoClasses)));
        mem.init_class(0, &mut rng).unwrap();
        mem.init_class(1, &mut rng).unwrap();
        mem.prototypes.insert(0, array![1.0, 0.0]);
        mem.prototypes.insert(1, array![0.0, 1.0]);
        assert_eq!(mem.classify(f.view()).unwrap(), 1);
        assert_eq!(mem.classify(array![1.0, 0.0].view()).unwrap(), 0);
        // Exact tie: lowest class id wins.
        let tie = array![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        assert_eq!(mem.classify(tie.view()).unwrap(), 0);
        // Batch path agrees.
        let feats = ndarray::stack![Axis(0), f, tie];
        assert_eq!(mem.classify_batch(feats.view()).unwrap(), vec![1, 0]);
    }

    #[test]
    fn classify_is_scale_invariant() {
        let mut mem = ProtoMemory::new(config(10, 0.9)).unwrap();
        let mut rng = Rng::from_seed(14);
        for c in 0..4 {
            mem.init_class(c, &mut rng).unwrap();
        }
        let mut query_rng = Rng::from_seed(15);
        for _ in 0..50 {
            let f = Vector::from_shape_fn(2, |_| query_rng.normal());
            let before = mem.classify(f.view()).unwrap();
            let mut scaled = mem.clone();
            for p in scaled.prototypes.values_mut() {
                *p *= 37.5;
            }
            assert_eq!(scaled.classify(f.view()).unwrap(), before);
        }
    }

    #[test]
    fn capacity_invariant_under_adversarial_arrivals() {
        // Interleave arrivals and late class introductions; capacity and
        // per-class caps must hold throughout.
        let capacity = 13usize;
        let mut mem = ProtoMemory::new(MemoryConfig {
            latent_dim: 2,
            ..config(capacity, 0.9)
        })
        .unwrap();
        let mut rng = Rng::from_seed(16);
        let mut arrival_rng = Rng::from_seed(17);
        let mut next_class = 0usize;
        for step in 0..500 {
            if step % 40 == 0 && next_class < 7 {
                mem.init_class(next_class, &mut rng).unwrap();
                next_class += 1;
            }
            let y = arrival_rng.index(next_class);
            let x = row([step as f64, y as f64]);
            mem.prototype_update(x.view(), &[y]).unwrap();
            mem.memory_update(x.view(), &[y], &mut rng).unwrap();
            assert!(mem.total_exemplars() <= capacity);
            for &c in mem.observed() {
                assert!(mem.exemplar_count(c) <= mem.per_class_cap());
            }
        }
        // Every class ends fully stocked: the stream was long enough.
        for &c in mem.observed() {
            assert_eq!(mem.exemplar_count(c), mem.per_class_cap());
        }
    }

    #[test]
    fn prototypes_stay_unit_norm_under_random_updates() {
        let mut mem = ProtoMemory::new(MemoryConfig {
            latent_dim: 3,
            ..config(10, 0.99)
        })
        .unwrap();
        let mut rng = Rng::from_seed(18);
        for c in 0..3 {
            mem.init_class(c, &mut rng).unwrap();
        }
        let mut feat_rng = Rng::from_seed(19);
        for _ in 0..2000 {
            let y = feat_rng.index(3);
            let f = Vector::from_shape_fn(3, |_| feat_rng.normal());
            let f = l2_normalize(f.view()).unwrap();
            let m = Matrix::from_shape_vec((1, 3), f.to_vec()).unwrap();
            mem.prototype_update(m.view(), &[y]).unwrap();
            for p in mem.prototypes().values() {
                assert_abs_diff_eq!(p.dot(p).sqrt(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stream_only_counts_mode() {
        let mut mem = ProtoMemory::new(MemoryConfig {
            stream_only_counts: true,
            ..config(5, 0.9)
        })
        .unwrap();
        let mut rng = Rng::from_seed(20);
        mem.init_class(0, &mut rng).unwrap();
        let feats = Matrix::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        // prototype_update no longer advances the count...
        mem.prototype_update(feats.view(), &[0, 0]).unwrap();
        assert_eq!(mem.counts()[&0], 0);
        // ...memory_update does, once per stream arrival.
        mem.memory_update(feats.view(), &[0, 0], &mut rng).unwrap();
        assert_eq!(mem.counts()[&0], 2);
    }
}
