use crate::seed::derive_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_REPLICATES: usize = 1000;

/// One scored record tagged with its original document and variant index.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit<T> {
    pub original: String,
    pub variant: u32,
    pub item: T,
}

/// A unit drawn into a resample. `copy` distinguishes repeated draws of the
/// same original on the d axis.
#[derive(Debug)]
pub struct Resampled<'a, T> {
    pub copy: usize,
    pub unit: &'a Unit<T>,
}

impl<T> Clone for Resampled<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for Resampled<'_, T> {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Resample original documents.
    D,
    /// Resample assignment variants within each original.
    S,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::D => "d",
            Axis::S => "s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BootstrapError {
    #[error("bootstrap needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("no resample produced a score")]
    NoData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreWithCI {
    pub point: f64,
    pub ci_d: Option<(f64, f64)>,
    pub ci_s: Option<(f64, f64)>,
    pub replicates: usize,
    pub n: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// 2.5th and 97.5th percentiles with linear interpolation between order
/// statistics.
pub fn percentile_interval(values: &mut [f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (values.len() - 1) as f64;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        values[lo] + (h - lo as f64) * (values[hi] - values[lo])
    };
    Some((q(0.025), q(0.975)))
}

fn index<T>(units: &[Unit<T>]) -> BTreeMap<&str, BTreeMap<u32, Vec<&Unit<T>>>> {
    let mut out: BTreeMap<&str, BTreeMap<u32, Vec<&Unit<T>>>> = BTreeMap::new();
    for u in units {
        out.entry(u.original.as_str()).or_default().entry(u.variant).or_default().push(u);
    }
    out
}

/// Percentile interval of `score` over `replicates` resamples along `axis`.
/// Each replicate draws from its own seed derived from `seed`, so the result
/// does not depend on thread scheduling.
pub fn bootstrap<T, F>(
    units: &[Unit<T>],
    score: F,
    axis: Axis,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64), BootstrapError>
where
    T: Sync,
    F: Fn(&[Resampled<'_, T>]) -> Option<f64> + Sync,
{
    if replicates < 2 {
        return Err(BootstrapError::TooFewReplicates(replicates));
    }
    let idx = index(units);
    let originals: Vec<&BTreeMap<u32, Vec<&Unit<T>>>> = idx.values().collect();
    if originals.is_empty() {
        return Err(BootstrapError::NoData);
    }
    let mut values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = derive_rng(seed, &["bootstrap", axis.label(), &r.to_string()]);
            let mut sample = Vec::with_capacity(units.len());
            match axis {
                Axis::D => {
                    for copy in 0..originals.len() {
                        let o = originals[rng.gen_range(0..originals.len())];
                        sample.extend(o.values().flatten().map(|&unit| Resampled { copy, unit }));
                    }
                }
                Axis::S => {
                    for (copy, o) in originals.iter().enumerate() {
                        let variants: Vec<&Vec<&Unit<T>>> = o.values().collect();
                        for _ in 0..variants.len() {
                            let v = variants[rng.gen_range(0..variants.len())];
                            sample.extend(v.iter().map(|&unit| Resampled { copy, unit }));
                        }
                    }
                }
            }
            score(&sample).filter(|v| v.is_finite())
        })
        .collect();
    percentile_interval(&mut values).ok_or(BootstrapError::NoData)
}

/// Every unit once, each original its own copy.
pub fn full_sample<T>(units: &[Unit<T>]) -> Vec<Resampled<'_, T>> {
    let idx = index(units);
    idx.values()
        .enumerate()
        .flat_map(|(copy, o)| o.values().flatten().map(move |&unit| Resampled { copy, unit }))
        .collect()
}

/// Point estimate on the full data plus d- and (optionally) s-axis intervals.
pub fn score_with_ci<T, F>(
    units: &[Unit<T>],
    score: F,
    with_s: bool,
    replicates: usize,
    seed: u64,
) -> Result<ScoreWithCI, BootstrapError>
where
    T: Sync,
    F: Fn(&[Resampled<'_, T>]) -> Option<f64> + Sync,
{
    let point = score(&full_sample(units)).ok_or(BootstrapError::NoData)?;
    let mut diagnostics = Vec::new();
    let mut interval = |axis: Axis| match bootstrap(units, &score, axis, replicates, seed) {
        Ok(ci) => Ok(Some(ci)),
        Err(BootstrapError::NoData) => {
            diagnostics.push(format!("no {}-axis resample produced a score", axis.label()));
            Ok(None)
        }
        Err(e) => Err(e),
    };
    let ci_d = interval(Axis::D)?;
    let ci_s = if with_s { interval(Axis::S)? } else { None };
    Ok(ScoreWithCI {
        point,
        ci_d,
        ci_s,
        replicates,
        n: units.len(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units() -> Vec<Unit<f64>> {
        (0..5)
            .flat_map(|o| {
                (0..4).map(move |v| Unit {
                    original: format!("o{o}"),
                    variant: v,
                    item: (o * 10 + v) as f64,
                })
            })
            .collect()
    }

    fn mean(s: &[Resampled<'_, f64>]) -> Option<f64> {
        (!s.is_empty()).then(|| s.iter().map(|r| r.unit.item).sum::<f64>() / s.len() as f64)
    }

    #[test]
    fn constant_score_gives_degenerate_interval() {
        let ci = bootstrap(&units(), |_| Some(3.0), Axis::D, 50, 1).unwrap();
        assert_eq!(ci, (3.0, 3.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let u = units();
        assert_eq!(
            bootstrap(&u, mean, Axis::D, 200, 9).unwrap(),
            bootstrap(&u, mean, Axis::D, 200, 9).unwrap()
        );
        assert_eq!(
            bootstrap(&u, mean, Axis::S, 200, 9).unwrap(),
            bootstrap(&u, mean, Axis::S, 200, 9).unwrap()
        );
    }

    #[test]
    fn d_axis_keeps_originals_whole() {
        let u = units();
        let ok = |s: &[Resampled<'_, f64>]| {
            let mut per_copy: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
            for r in s {
                per_copy.entry(r.copy).or_default().push(&r.unit.original);
            }
            let whole = per_copy.values().all(|v| v.len() == 4 && v.iter().all(|o| *o == v[0]));
            Some(if whole { 1.0 } else { 0.0 })
        };
        assert_eq!(bootstrap(&u, ok, Axis::D, 100, 2).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn too_few_replicates() {
        assert_eq!(
            bootstrap(&units(), mean, Axis::D, 1, 0),
            Err(BootstrapError::TooFewReplicates(1))
        );
    }

    #[test]
    fn percentiles_interpolate() {
        let mut v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile_interval(&mut v), Some((2.5, 97.5)));
    }
}
