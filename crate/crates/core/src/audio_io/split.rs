use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AudioError, DatasetManifest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            val_fraction_of_train: 0.1,
            seed: 0,
            stratified: false,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AudioError> {
        let ok = |f: f64| f > 0.0 && f < 1.0;
        if !ok(self.test_fraction) || !ok(self.val_fraction_of_train) {
            return Err(AudioError::InvalidSplit(format!(
                "fractions must lie in (0, 1), got test={} val={}",
                self.test_fraction, self.val_fraction_of_train
            )));
        }
        Ok(())
    }

    /// (|test|, |val|) for a manifest of `n` items.
    pub fn sizes(&self, n: usize) -> (usize, usize) {
        let test = ((self.test_fraction * n as f64).round() as usize).min(n);
        let val = ((self.val_fraction_of_train * (n - test) as f64).round() as usize).min(n - test);
        (test, val)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: DatasetManifest,
    pub val: DatasetManifest,
    pub test: DatasetManifest,
}

/// Distributes `total` items across groups in proportion to `weights`
/// using largest remainders; each share is the floor or ceiling of its quota.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let mut left = total - shares.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainder numerators: (total*w) mod sum
    order.sort_by(|&a, &b| {
        let ra = total * weights[a] % sum;
        let rb = total * weights[b] % sum;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        if shares[i] < weights[i] {
            shares[i] += 1;
            left -= 1;
        }
    }
    shares
}

/// Partitions a manifest into disjoint train/validation/test subsets.
/// Each subset keeps the manifest's path order.
pub fn split_dataset(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<DatasetSplit, AudioError> {
    spec.validate()?;
    if manifest.is_empty() {
        return Err(AudioError::InvalidSplit("manifest is empty".into()));
    }
    let n = manifest.len();
    let (n_test, n_val) = spec.sizes(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // 0 = train, 1 = val, 2 = test
    let mut assignment = vec![0u8; n];
    if spec.stratified {
        let counts = manifest.class_counts();
        if let Some((class, &count)) = counts
            .iter()
            .enumerate()
            .find(|(_, &c)| c > 0 && c < 3)
        {
            return Err(AudioError::ClassTooSmall { class, count });
        }
        let test_shares = apportion(n_test, &counts);
        let remaining: Vec<usize> = counts.iter().zip(&test_shares).map(|(c, t)| c - t).collect();
        let val_shares = apportion(n_val, &remaining);
        for class in 0..manifest.class_count {
            let mut members: Vec<usize> = (0..n)
                .filter(|&i| manifest.entries[i].label == class)
                .collect();
            members.shuffle(&mut rng);
            for (k, &i) in members.iter().enumerate() {
                assignment[i] = if k < test_shares[class] {
                    2
                } else if k < test_shares[class] + val_shares[class] {
                    1
                } else {
                    0
                };
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order[..n_test] {
            assignment[i] = 2;
        }
        for &i in &order[n_test..n_test + n_val] {
            assignment[i] = 1;
        }
    }

    let pick = |tag: u8| {
        manifest.subset(
            manifest
                .entries
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == tag)
                .map(|(e, _)| e.clone())
                .collect(),
        )
    };
    Ok(DatasetSplit {
        train: pick(0),
        val: pick(1),
        test: pick(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::ManifestEntry;
    use std::collections::HashSet;
    use std::path::PathBuf;

    fn manifest(per_class: &[usize]) -> DatasetManifest {
        let mut entries = Vec::new();
        for (label, &k) in per_class.iter().enumerate() {
            for i in 0..k {
                entries.push(ManifestEntry {
                    path: PathBuf::from(format!("{label}_s_{i:04}.wav")),
                    label,
                    speaker: None,
                });
            }
        }
        DatasetManifest::new("/data", entries, 10).unwrap()
    }

    #[test]
    fn default_sizes_for_1500() {
        let m = manifest(&[150; 10]);
        let s = split_dataset(&m, &SplitSpec::with_seed(3)).unwrap();
        assert_eq!((s.test.len(), s.val.len(), s.train.len()), (300, 120, 1080));
    }

    #[test]
    fn same_seed_same_split() {
        let m = manifest(&[1; 10]);
        let a = split_dataset(&m, &SplitSpec::with_seed(11)).unwrap();
        let b = split_dataset(&m, &SplitSpec::with_seed(11)).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&manifest(&[40; 10]), &SplitSpec::with_seed(12)).unwrap();
        let d = split_dataset(&manifest(&[40; 10]), &SplitSpec::with_seed(13)).unwrap();
        assert_ne!(c.test, d.test);
    }

    #[test]
    fn stratified_balances_classes_exactly_when_divisible() {
        let m = manifest(&[100; 10]);
        let spec = SplitSpec {
            stratified: true,
            ..SplitSpec::with_seed(5)
        };
        let s = split_dataset(&m, &spec).unwrap();
        // independent count: walk each subset and tally labels
        for (subset, per_class) in [(&s.test, 20), (&s.val, 8), (&s.train, 72)] {
            let mut tally = [0usize; 10];
            for e in &subset.entries {
                tally[e.label] += 1;
            }
            assert_eq!(tally, [per_class; 10]);
        }
    }

    #[test]
    fn stratified_within_one_of_proportion() {
        let counts = [13, 7, 29, 3, 11, 5, 17, 23, 9, 4];
        let m = manifest(&counts);
        let spec = SplitSpec {
            stratified: true,
            ..SplitSpec::with_seed(1)
        };
        let s = split_dataset(&m, &spec).unwrap();
        let (n_test, n_val) = spec.sizes(m.len());
        assert_eq!(s.test.len(), n_test);
        assert_eq!(s.val.len(), n_val);
        let n = m.len() as f64;
        for (class, &c) in counts.iter().enumerate() {
            let t = s.test.entries.iter().filter(|e| e.label == class).count() as f64;
            assert!((t - n_test as f64 * c as f64 / n).abs() <= 1.0);
        }
    }

    #[test]
    fn stratified_rejects_tiny_class() {
        let m = manifest(&[5, 2, 5, 5, 5, 5, 5, 5, 5, 5]);
        let spec = SplitSpec {
            stratified: true,
            ..SplitSpec::default()
        };
        assert!(matches!(
            split_dataset(&m, &spec),
            Err(AudioError::ClassTooSmall { class: 1, count: 2 })
        ));
    }

    #[test]
    fn rejects_bad_fractions() {
        let m = manifest(&[3; 10]);
        for (t, v) in [(0.0, 0.1), (1.0, 0.1), (0.2, 0.0), (0.2, 1.5)] {
            let spec = SplitSpec {
                test_fraction: t,
                val_fraction_of_train: v,
                ..SplitSpec::default()
            };
            assert!(split_dataset(&m, &spec).is_err());
        }
    }

    #[test]
    fn apportion_sums_and_bounds() {
        let w = [13, 7, 29, 3, 11];
        let s = apportion(20, &w);
        assert_eq!(s.iter().sum::<usize>(), 20);
        let total: usize = w.iter().sum();
        for (share, weight) in s.iter().zip(w) {
            let quota = 20.0 * weight as f64 / total as f64;
            assert!((*share as f64 - quota).abs() < 1.0);
        }
    }

    #[test]
    fn partition_property_over_seeds() {
        let m = manifest(&[10, 10, 10, 10, 10, 10, 10, 9, 9, 9]);
        assert_eq!(m.len(), 97);
        for seed in 0..1000 {
            for stratified in [false, true] {
                let spec = SplitSpec {
                    stratified,
                    ..SplitSpec::with_seed(seed)
                };
                let s = split_dataset(&m, &spec).unwrap();
                let mut all = HashSet::new();
                for part in [&s.train, &s.val, &s.test] {
                    for e in &part.entries {
                        assert!(all.insert(e.path.clone()));
                    }
                }
                assert_eq!(all.len(), 97);
            }
        }
    }
}
