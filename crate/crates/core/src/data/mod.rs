//! Dataset generation, CSV ingestion, quantization and splitting.

mod csvio;
mod fetch;
mod manifest;

pub use csvio::{load_csv, write_csv, MISSING_TOKENS};
pub use fetch::{cache_dir, fetch, FetchSpec, CACHE_ENV, FETCHERS};
pub use manifest::{DatasetManifest, MissingPolicy, MixtureChoice, Source, MANIFEST_VERSION};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Stage, StageLayout, StagedDataset};
use crate::oracle::GaussianMixtureSpec;
use crate::seed::{self, Purpose};

/// One stage per coordinate, all free of cost.
pub fn coordinate_layout(dim: usize) -> Result<StageLayout> {
    StageLayout::new(
        (0..dim)
            .map(|d| Stage {
                features: vec![d],
                cost: 0.0,
            })
            .collect(),
    )
}

/// `n` draws from `spec` with coordinate `d` revealed at stage `d`, optionally
/// quantized to `quantize_levels` equal-width levels per coordinate.
pub fn generate_mixture(
    spec: &GaussianMixtureSpec,
    n: usize,
    seed: u64,
    quantize_levels: Option<usize>,
) -> Result<StagedDataset> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let mut rng = seed::rng(seed, 0, Purpose::Generate);
    let (values, labels) = spec.sample(n, &mut rng)?;
    let dim = spec.dim();
    let mut features = Array2::from_shape_vec((n, dim), values).expect("sample shape");
    if let Some(levels) = quantize_levels {
        for mut column in features.columns_mut() {
            let q = quantize(&column.to_vec(), levels)?;
            column.assign(&ndarray::Array1::from(q));
        }
    }
    StagedDataset::new(features, labels, coordinate_layout(dim)?)
}

/// Maps each value to the center of its bin among `levels` equal-width bins
/// spanning `[min, max]` of `values`.
pub fn quantize(values: &[f64], levels: usize) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::input("quantization needs at least one level"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() || hi <= lo {
        return Ok(values.to_vec());
    }
    let width = (hi - lo) / levels as f64;
    Ok(values
        .iter()
        .map(|&v| {
            let bin = (((v - lo) / width) as usize).min(levels - 1);
            lo + width * (bin as f64 + 0.5)
        })
        .collect())
}

/// Random split into `(train, test)` with `fraction` of the rows in `train`.
///
/// Stratified splits draw `round(fraction * n_c)` training rows from each
/// class separately. Both parts keep their rows in original order.
pub fn split<R: Rng + ?Sized>(
    data: &StagedDataset,
    fraction: f64,
    stratified: bool,
    rng: &mut R,
) -> Result<(StagedDataset, StagedDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::input(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let groups: Vec<Vec<usize>> = if stratified {
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| data.labels()[i] == 1);
        for (name, g) in [("positive", &pos), ("negative", &neg)] {
            if g.len() < 2 {
                return Err(Error::input(format!(
                    "stratified split needs at least 2 {name} examples, found {}",
                    g.len()
                )));
            }
        }
        vec![pos, neg]
    } else {
        if data.len() < 2 {
            return Err(Error::input("a split needs at least 2 rows"));
        }
        vec![(0..data.len()).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut group in groups {
        group.shuffle(rng);
        let take = ((fraction * group.len() as f64).round() as usize).clamp(1, group.len() - 1);
        train.extend_from_slice(&group[..take]);
        test.extend_from_slice(&group[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train)?, data.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn balanced(n_pos: usize, n_neg: usize) -> StagedDataset {
        let n = n_pos + n_neg;
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let labels = (0..n).map(|i| if i < n_pos { 1 } else { -1 }).collect();
        StagedDataset::new(features, labels, coordinate_layout(1).unwrap()).unwrap()
    }

    #[test]
    fn half_split_of_hundred_rows() {
        let data = balanced(50, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = split(&data, 0.5, false, &mut rng).unwrap();
        assert_eq!((a.len(), b.len()), (50, 50));
        let mut all: Vec<f64> = a.rows().chain(b.rows()).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn stratification_keeps_balance() {
        let data = balanced(60, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, _) = split(&data, 0.5, true, &mut rng).unwrap();
        assert_eq!(a.class_counts(), (30, 20));
    }

    #[test]
    fn tiny_class_cannot_be_stratified() {
        let data = balanced(1, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(split(&data, 0.5, true, &mut rng).is_err());
    }

    #[test]
    fn quantization_bounds_distinct_values() {
        let data = generate_mixture(&GaussianMixtureSpec::standard(), 1000, 7, Some(20)).unwrap();
        for column in data.features().columns() {
            let mut v: Vec<f64> = column.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            assert!(v.len() <= 20);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GaussianMixtureSpec::standard();
        assert_eq!(
            generate_mixture(&spec, 1000, 7, None).unwrap(),
            generate_mixture(&spec, 1000, 7, None).unwrap()
        );
    }
}
