//! Conditional-mean-zero test for compensated increments.

use serde::{Deserialize, Serialize};

use super::binning::tensor_cells;
use super::{mean_se, Verdict};

/// One increment of a process over a macro step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    /// Conditioning features, known at the start of the step. The second is
    /// ignored by one-feature specs.
    pub features: [f64; 2],
    /// Raw increment of the process.
    pub raw: f64,
    /// Integrated drift over the step.
    pub drift: f64,
}

impl Observation {
    pub fn compensated(&self) -> f64 {
        self.raw - self.drift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTestSpec {
    pub feature_names: Vec<String>,
    pub bins_per_feature: usize,
    /// Band half-width in standard errors.
    pub sigma: f64,
    pub min_occupancy: usize,
    /// Fraction of bins that must fall inside the band.
    pub pass_fraction: f64,
    /// A bin is eligible for the negative control when its mean drift
    /// exceeds this many raw standard errors.
    pub control_drift_factor: f64,
    /// Fraction of eligible bins in which the raw test must fail.
    pub control_fail_fraction: f64,
}

impl MartingaleTestSpec {
    pub fn new<S: Into<String>>(features: impl IntoIterator<Item = S>) -> Self {
        Self {
            feature_names: features.into_iter().map(Into::into).collect(),
            bins_per_feature: 20,
            sigma: 3.0,
            min_occupancy: 30,
            pass_fraction: 0.95,
            control_drift_factor: 2.0,
            control_fail_fraction: 0.5,
        }
    }

    pub fn dims(&self) -> usize {
        self.feature_names.len().clamp(1, 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub row: usize,
    pub first_col: usize,
    pub last_col: usize,
    pub n: usize,
    pub centroid: [f64; 2],
    pub mean: f64,
    pub se: f64,
    pub z: f64,
    pub raw_mean: f64,
    pub raw_se: f64,
    pub raw_z: f64,
    pub mean_drift: f64,
    pub within_band: bool,
}

/// Outcome of the uncompensated run on the same bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSummary {
    /// Bins where the integrated drift exceeds the raw noise level.
    pub eligible_bins: usize,
    /// Eligible bins where the raw increments leave the band.
    pub detected_bins: usize,
    /// `None` when no bin is eligible.
    pub detection_fraction: Option<f64>,
    /// Whether the control behaved as required; `None` if not applicable.
    pub detects_drift: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub spec: MartingaleTestSpec,
    pub n_observations: usize,
    pub dropped_observations: usize,
    pub occupied_bins: usize,
    pub bins_within_band: usize,
    pub fraction_within_band: f64,
    pub max_abs_z: f64,
    pub verdict: Verdict,
    pub control: ControlSummary,
    pub pass: bool,
    pub notes: Vec<String>,
    pub bins: Vec<BinRow>,
}

impl TestReport {
    /// Per-bin table as CSV with a header row.
    pub fn bins_csv(&self) -> String {
        let mut out = String::from("row,first_col,last_col,n,centroid_0,centroid_1,mean,se,z,raw_mean,raw_se,raw_z,mean_drift,within_band\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                b.row, b.first_col, b.last_col, b.n, b.centroid[0], b.centroid[1], b.mean, b.se, b.z, b.raw_mean,
                b.raw_se, b.raw_z, b.mean_drift, b.within_band
            ));
        }
        out
    }
}

/// Test `E[raw - drift | features] = 0` bin by bin, and check that the raw
/// increments alone fail where the drift is visible.
pub fn cond_mean_zero(name: &str, obs: &[Observation], spec: &MartingaleTestSpec) -> TestReport {
    let cells = tensor_cells(
        &obs.iter().map(|o| o.features).collect::<Vec<_>>(),
        spec.dims(),
        spec.bins_per_feature,
        spec.min_occupancy,
    );
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
    for (i, id) in cells.of_item.iter().enumerate() {
        if let Some(id) = id {
            members[*id].push(i);
        }
    }

    let bins: Vec<BinRow> = members
        .iter()
        .zip(&cells.extent)
        .filter(|(m, _)| m.len() >= spec.min_occupancy)
        .map(|(m, &(row, first_col, last_col))| {
            let pick = |f: fn(&Observation) -> f64| m.iter().map(move |&i| f(&obs[i]));
            let (mean, se, n) = mean_se(pick(Observation::compensated));
            let (raw_mean, raw_se, _) = mean_se(pick(|o| o.raw));
            let mean_drift = pick(|o| o.drift).sum::<f64>() / n as f64;
            let centroid = [pick(|o| o.features[0]).sum::<f64>() / n as f64, pick(|o| o.features[1]).sum::<f64>() / n as f64];
            let z = z_score(mean, se);
            BinRow {
                row,
                first_col,
                last_col,
                n,
                centroid,
                mean,
                se,
                z,
                raw_mean,
                raw_se,
                raw_z: z_score(raw_mean, raw_se),
                mean_drift,
                within_band: z.abs() <= spec.sigma,
            }
        })
        .collect();

    let occupied = bins.len();
    let within = bins.iter().filter(|b| b.within_band).count();
    let fraction = if occupied > 0 { within as f64 / occupied as f64 } else { 0.0 };
    let eligible: Vec<&BinRow> = bins.iter().filter(|b| b.mean_drift.abs() > spec.control_drift_factor * b.raw_se).collect();
    let detected = eligible.iter().filter(|b| b.raw_z.abs() > spec.sigma).count();
    let detection_fraction = (!eligible.is_empty()).then(|| detected as f64 / eligible.len() as f64);
    let control = ControlSummary {
        eligible_bins: eligible.len(),
        detected_bins: detected,
        detection_fraction,
        detects_drift: detection_fraction.map(|f| f >= spec.control_fail_fraction),
    };

    let mut notes = Vec::new();
    let verdict = if occupied == 0 {
        notes.push("no bin reached the occupancy floor".into());
        Verdict::Degenerate
    } else {
        Verdict::from_pass(fraction >= spec.pass_fraction)
    };
    if control.detects_drift.is_none() {
        notes.push("negative control not applicable: no bin has a drift above the raw noise level".into());
    }
    if cells.dropped > 0 {
        notes.push(format!("{} observations fell in under-occupied rows and were dropped", cells.dropped));
    }
    let pass = verdict.is_pass() && control.detects_drift != Some(false);
    TestReport {
        name: name.into(),
        spec: spec.clone(),
        n_observations: obs.len(),
        dropped_observations: cells.dropped,
        occupied_bins: occupied,
        bins_within_band: within,
        fraction_within_band: fraction,
        max_abs_z: bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max),
        verdict,
        control,
        pass,
        notes,
        bins,
    }
}

fn z_score(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, seed: u64, drift: impl Fn(f64) -> f64) -> Vec<Observation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-2.0..2.0);
                let e: f64 = rng.sample(StandardNormal);
                let d = drift(x);
                Observation { features: [x, 0.0], raw: d + 0.1 * e, drift: d }
            })
            .collect()
    }

    #[test]
    fn zero_drift_noise_passes_and_control_is_not_applicable() {
        let obs = noise(20_000, 1, |_| 0.0);
        let r = cond_mean_zero("null", &obs, &MartingaleTestSpec::new(["x"]));
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.occupied_bins, 20);
        assert_eq!(r.control.detects_drift, None);
        assert!(r.pass);
    }

    #[test]
    fn visible_drift_is_compensated_and_detected() {
        let obs = noise(20_000, 2, |x| 0.02 * x);
        let r = cond_mean_zero("linear", &obs, &MartingaleTestSpec::new(["x"]));
        assert!(r.pass, "{:?}", r.notes);
        assert_eq!(r.control.detects_drift, Some(true));
    }

    #[test]
    fn wrong_sign_drift_fails() {
        let mut obs = noise(20_000, 3, |x| 0.02 * x);
        obs.iter_mut().for_each(|o| o.drift = -o.drift);
        let r = cond_mean_zero("flipped", &obs, &MartingaleTestSpec::new(["x"]));
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(!r.pass);
    }

    #[test]
    fn empty_input_is_degenerate() {
        let r = cond_mean_zero("empty", &[], &MartingaleTestSpec::new(["x", "y"]));
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert!(!r.pass);
    }

    #[test]
    fn reports_are_deterministic() {
        let obs = noise(5000, 4, |x| 0.01 * x);
        let spec = MartingaleTestSpec::new(["x"]);
        assert_eq!(cond_mean_zero("a", &obs, &spec), cond_mean_zero("a", &obs, &spec));
    }
}
