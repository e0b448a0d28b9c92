//! Survival frequencies of a random time against its Azéma supermartingale.

use serde::Serialize;

use super::binning::{bin_of, quantile_edges};
use super::{mean_se, Verdict};

/// One path at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AzemaObservation {
    pub feature: f64,
    /// `{random time > t}`.
    pub survived: bool,
    /// Model value of `P[random time > t | F_t]`.
    pub azema: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AzemaBin {
    pub t: f64,
    pub bin: usize,
    pub n: usize,
    pub feature_mean: f64,
    pub empirical: f64,
    pub model: f64,
    pub se: f64,
    pub z: f64,
    pub within_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AzemaReport {
    pub name: String,
    pub bins: Vec<AzemaBin>,
    /// `(t, bin, survivals, non-survivals)` of bins left out for having too
    /// few of either.
    pub dropped_bins: Vec<(f64, usize, usize, usize)>,
    pub occupied_bins: usize,
    pub fraction_within_band: f64,
    pub verdict: Verdict,
    pub pass: bool,
}

impl AzemaReport {
    /// Per-bin table as CSV with a header row.
    pub fn bins_csv(&self) -> String {
        let mut out = String::from("t,bin,n,feature_mean,empirical,model,se,z,within_band\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                b.t, b.bin, b.n, b.feature_mean, b.empirical, b.model, b.se, b.z, b.within_band
            ));
        }
        out
    }
}

/// Per time and feature bin, compare the survival frequency with the mean
/// model value. The standard error is that of `1{survived} - azema`.
pub fn azema_consistency(
    name: &str,
    per_time: &[(f64, Vec<AzemaObservation>)],
    bins: usize,
    min_events: usize,
    sigma: f64,
    pass_fraction: f64,
) -> AzemaReport {
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (t, obs) in per_time {
        let feats: Vec<f64> = obs.iter().map(|o| o.feature).collect();
        let edges = quantile_edges(&feats, bins);
        let mut groups: Vec<Vec<&AzemaObservation>> = vec![Vec::new(); edges.len() + 1];
        for o in obs {
            groups[bin_of(&edges, o.feature)].push(o);
        }
        for (b, g) in groups.iter().enumerate() {
            let alive = g.iter().filter(|o| o.survived).count();
            let dead = g.len() - alive;
            if alive < min_events || dead < min_events {
                if !g.is_empty() {
                    dropped.push((*t, b, alive, dead));
                }
                continue;
            }
            let resid = g.iter().map(|o| if o.survived { 1.0 } else { 0.0 } - o.azema);
            let (mean, se, n) = mean_se(resid);
            let z = if se > 0.0 { mean / se } else { 0.0 };
            rows.push(AzemaBin {
                t: *t,
                bin: b,
                n,
                feature_mean: g.iter().map(|o| o.feature).sum::<f64>() / n as f64,
                empirical: alive as f64 / n as f64,
                model: g.iter().map(|o| o.azema).sum::<f64>() / n as f64,
                se,
                z,
                within_band: z.abs() <= sigma,
            });
        }
    }
    let occupied = rows.len();
    let within = rows.iter().filter(|r| r.within_band).count();
    let fraction = if occupied > 0 { within as f64 / occupied as f64 } else { 0.0 };
    // With no testable bin, agreement can still be exact when the model is
    // deterministic on every path.
    let exact = per_time.iter().any(|(_, o)| !o.is_empty())
        && per_time.iter().flat_map(|(_, o)| o).all(|o| (o.azema == 1.0 && o.survived) || (o.azema == 0.0 && !o.survived));
    let verdict = match occupied {
        0 if exact => Verdict::Pass,
        0 => Verdict::Degenerate,
        _ => Verdict::from_pass(fraction >= pass_fraction),
    };
    AzemaReport {
        name: name.into(),
        bins: rows,
        dropped_bins: dropped,
        occupied_bins: occupied,
        fraction_within_band: fraction,
        verdict,
        pass: verdict.is_pass(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn certain_survival_agrees_exactly() {
        let obs = (0..100).map(|i| AzemaObservation { feature: i as f64, survived: true, azema: 1.0 }).collect();
        let r = azema_consistency("sure", &[(0.5, obs)], 10, 5, 3.0, 0.95);
        assert!(r.pass);
        assert_eq!(r.occupied_bins, 0);
    }

    #[test]
    fn exponential_survival_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = 1.0;
        let per_time: Vec<(f64, Vec<AzemaObservation>)> = {
            let taus: Vec<(f64, f64)> = (0..20_000).map(|_| (rng.random::<f64>(), -rng.random::<f64>().ln() / lambda)).collect();
            [0.25, 0.5, 1.0]
                .iter()
                .map(|&t| (t, taus.iter().map(|&(f, tau)| AzemaObservation { feature: f, survived: tau > t, azema: (-lambda * t).exp() }).collect()))
                .collect()
        };
        let r = azema_consistency("cox", &per_time, 20, 5, 3.0, 0.95);
        assert!(r.pass, "{}", r.fraction_within_band);
        let wrong: Vec<_> = per_time
            .iter()
            .map(|(t, o)| (*t, o.iter().map(|x| AzemaObservation { azema: (-2.0 * t).exp(), ..*x }).collect()))
            .collect();
        assert!(!azema_consistency("wrong", &wrong, 20, 5, 3.0, 0.95).pass);
    }
}
