use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResampleStrategy {
    RandomOver,
    RandomUnder,
    Smote,
}

pub const DEFAULT_SMOTE_K: usize = 5;

/// Balances class counts. Over-sampling and SMOTE grow every present class
/// to the majority count, under-sampling shrinks them to the minority
/// count. Classes with no rows are left empty.
///
/// Output rows keep the input order for retained originals; new rows are
/// appended class by class.
pub fn resample(d: &Dataset, strategy: ResampleStrategy, k_neighbors: usize, seed: u64) -> Result<Dataset, LearnError> {
    let counts = d.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(LearnError::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class: Vec<Vec<usize>> = (0..counts.len())
        .map(|c| (0..d.len()).filter(|&i| d.y[i] == c).collect())
        .collect();
    match strategy {
        ResampleStrategy::RandomUnder => {
            let target = present.iter().map(|&c| counts[c]).min().unwrap();
            let mut keep = Vec::new();
            for &c in &present {
                let mut idx = by_class[c].clone();
                idx.shuffle(&mut rng);
                idx.truncate(target);
                keep.extend(idx);
            }
            keep.sort_unstable();
            Ok(d.subset(&keep))
        }
        ResampleStrategy::RandomOver => {
            let target = present.iter().map(|&c| counts[c]).max().unwrap();
            let mut out = d.clone();
            for &c in &present {
                for _ in counts[c]..target {
                    let i = *by_class[c].choose(&mut rng).unwrap();
                    out.push(d.x[i].clone(), c);
                }
            }
            Ok(out)
        }
        ResampleStrategy::Smote => {
            let target = present.iter().map(|&c| counts[c]).max().unwrap();
            for &c in &present {
                if counts[c] < target && counts[c] <= k_neighbors {
                    return Err(LearnError::TooFewMinoritySamples {
                        class: d.classes[c].clone(),
                        have: counts[c],
                        k: k_neighbors,
                    });
                }
            }
            let mut out = d.clone();
            for &c in &present {
                if counts[c] == target {
                    continue;
                }
                let members = &by_class[c];
                let neighbors: Vec<Vec<usize>> =
                    members.iter().map(|&i| nearest(d, members, i, k_neighbors)).collect();
                for _ in counts[c]..target {
                    let a = rng.gen_range(0..members.len());
                    let b = neighbors[a][rng.gen_range(0..neighbors[a].len())];
                    let lambda: f64 = rng.gen();
                    let p = &d.x[members[a]];
                    let q = &d.x[b];
                    let row = p.iter().zip(q).map(|(pi, qi)| pi + lambda * (qi - pi)).collect();
                    out.push(row, c);
                }
            }
            Ok(out)
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `k` nearest other members of the class, ties broken by row index.
fn nearest(d: &Dataset, members: &[usize], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = members
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| (sq_dist(&d.x[i], &d.x[j]), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.truncate(k);
    others.into_iter().map(|(_, j)| j).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class(n0: usize, n1: usize) -> Dataset {
        let mut d = Dataset::new(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()]);
        for i in 0..n0 {
            d.push(vec![i as f64, 0.0], 0);
        }
        for i in 0..n1 {
            d.push(vec![i as f64, 10.0 + i as f64], 1);
        }
        d
    }

    #[test]
    fn balanced_input_is_unchanged_by_over_sampling() {
        let d = two_class(10, 10);
        assert_eq!(resample(&d, ResampleStrategy::RandomOver, 5, 1).unwrap(), d);
    }

    #[test]
    fn smote_fills_to_majority() {
        let d = two_class(100, 30);
        let r = resample(&d, ResampleStrategy::Smote, 5, 1).unwrap();
        assert_eq!(r.class_counts(), vec![100, 100]);
    }

    #[test]
    fn smote_on_two_points_stays_on_the_segment() {
        let mut d = Dataset::new(vec!["a".into(), "b".into()], vec!["maj".into(), "min".into()]);
        for i in 0..6 {
            d.push(vec![5.0 + i as f64, -3.0], 0);
        }
        d.push(vec![0.0, 0.0], 1);
        d.push(vec![1.0, 1.0], 1);
        let r = resample(&d, ResampleStrategy::Smote, 1, 3).unwrap();
        for row in &r.x[d.len()..] {
            assert_eq!(row[0], row[1]);
            assert!((0.0..=1.0).contains(&row[0]));
        }
    }

    #[test]
    fn under_sampling_shrinks_to_minority() {
        let d = two_class(40, 7);
        let r = resample(&d, ResampleStrategy::RandomUnder, 5, 9).unwrap();
        assert_eq!(r.class_counts(), vec![7, 7]);
    }

    #[test]
    fn smote_needs_more_than_k_points() {
        let d = two_class(20, 3);
        assert!(matches!(
            resample(&d, ResampleStrategy::Smote, 5, 0),
            Err(LearnError::TooFewMinoritySamples { have: 3, k: 5, .. })
        ));
    }
}
