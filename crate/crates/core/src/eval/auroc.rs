use crate::error::{Error, Result};
use crate::eval::{Label, ScoredSequence};
use crate::scalar::Scalar;

/// Mann–Whitney AUROC: the fraction of (abnormal, normal) pairs in which the
/// abnormal score is higher, ties counting one half.
pub fn auroc<T: Scalar>(scored: &[ScoredSequence<T>]) -> Result<f64> {
    let mut normal = Vec::new();
    let mut abnormal = Vec::new();
    for s in scored {
        match s.label {
            Label::Normal => normal.push(s.score.as_f64()),
            Label::Abnormal => abnormal.push(s.score.as_f64()),
        }
    }
    auroc_split(&normal, &abnormal)
}

/// AUROC from separate score lists, computed from mid-ranks in `O(n log n)`.
pub fn auroc_split(normal: &[f64], abnormal: &[f64]) -> Result<f64> {
    if normal.is_empty() || abnormal.is_empty() {
        return Err(Error::UndefinedAuroc("need at least one normal and one abnormal score"));
    }
    if normal.iter().chain(abnormal).any(|s| s.is_nan()) {
        return Err(Error::Numerical("NaN score in AUROC input".into()));
    }
    let mut all: Vec<(f64, bool)> = normal
        .iter()
        .map(|&s| (s, false))
        .chain(abnormal.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Twice the rank sum keeps tied mid-ranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let twice_mid = (i + 1 + j) as u128;
        let hits = all[i..j].iter().filter(|e| e.1).count() as u128;
        twice_rank_sum += hits * twice_mid;
        i = j;
    }
    let (na, nn) = (abnormal.len() as u128, normal.len() as u128);
    let twice_u = twice_rank_sum - na * (na + 1);
    Ok(twice_u as f64 / (2 * na * nn) as f64)
}
