//! Spectral statistics, localization measures, heating times and fits.
//!
//! The r-statistic follows the usual convention: sort the levels, trim a
//! fraction off both spectrum edges, and average min/max ratios of
//! consecutive gaps. Degenerate gaps below [`GAP_GUARD`] are dropped
//! rather than allowed to produce 0/0. Reference values: Poisson spectra
//! give 2 ln 2 - 1, the Gaussian orthogonal ensemble about 0.5307.
//!
//! Parity-resolved statistics treat the two (n + s) mod 2 sectors as
//! independent spectra and weight their mean r by sector dimension;
//! pooling both sectors into one list pushes r toward the uncorrelated
//! Poisson value even for chaotic dynamics, which is why the policy is an
//! explicit choice everywhere here.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::Error;
use crate::floquet::{floquet_operator, floquet_spectrum};
use crate::hilbert::{extract_block, parity_partition, OperatorMatrix, ProductBasis};
use crate::linalg;
use crate::model::{drive_operator, static_hamiltonian, DriveParams, ModelParams};
use crate::Result;

/// Mean gap ratio of an uncorrelated (Poisson) spectrum, 2 ln 2 - 1.
pub const R_POISSON: f64 = 2.0 * std::f64::consts::LN_2 - 1.0;
/// Mean gap ratio of the Gaussian orthogonal ensemble (large-dimension).
pub const R_GOE: f64 = 0.5307;
/// Gaps below this are treated as exact degeneracies and dropped.
pub const GAP_GUARD: f64 = 1e-12;

/// Fewest levels (after edge trimming) accepted by [`r_statistic`].
pub const MIN_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorPolicy {
    /// One pooled spectrum across both parity sectors.
    Full,
    /// Per-sector spectra, mean r weighted by sector dimension.
    PerParitySector,
}

#[derive(Debug, Clone)]
pub struct LevelStatsResult {
    pub sector_policy: SectorPolicy,
    pub trim_fraction: f64,
    /// Individual gap ratios; under `PerParitySector` both sectors'
    /// ratios, even sector first.
    pub r_values: Vec<f64>,
    /// Under `Full` the plain mean of `r_values`; under `PerParitySector`
    /// the dimension-weighted mean of the per-sector means.
    pub mean_r: f64,
}

/// Per-gap min/max ratios of a level sequence after edge trimming.
fn gap_ratios(levels: &[f64], trim_fraction: f64) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::InvalidArgument(format!(
            "trim fraction {trim_fraction} must lie in [0, 0.5)"
        )));
    }
    let mut sorted: Vec<f64> = levels.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let cut = (trim_fraction * sorted.len() as f64).floor() as usize;
    let kept = &sorted[cut..sorted.len() - cut];
    if kept.len() < MIN_LEVELS {
        return Err(Error::TooFewLevels {
            needed: MIN_LEVELS,
            got: kept.len(),
        });
    }
    let gaps: Vec<f64> = kept
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g >= GAP_GUARD)
        .collect();
    if gaps.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two non-degenerate gaps".into(),
        ));
    }
    Ok(gaps
        .windows(2)
        .map(|g| g[0].min(g[1]) / g[0].max(g[1]))
        .collect())
}

/// Gap-ratio statistics of one level sequence.
///
/// `trim_fraction` of the sorted levels is discarded at each edge before
/// gaps are formed, so spectrum-edge states (which obey different
/// statistics) do not bias the mean.
pub fn r_statistic(levels: &[f64], trim_fraction: f64) -> Result<LevelStatsResult> {
    let r_values = gap_ratios(levels, trim_fraction)?;
    let mean_r = r_values.iter().sum::<f64>() / r_values.len() as f64;
    Ok(LevelStatsResult {
        sector_policy: SectorPolicy::Full,
        trim_fraction,
        r_values,
        mean_r,
    })
}

fn weighted_mean(parts: &[(usize, f64)]) -> f64 {
    let total: usize = parts.iter().map(|(w, _)| w).sum();
    parts.iter().map(|&(w, r)| w as f64 * r).sum::<f64>() / total as f64
}

/// Errors unless `h` is block-diagonal in the parity partition.
fn require_parity_preserving(h: &OperatorMatrix, basis: &ProductBasis) -> Result<()> {
    let (even, odd) = parity_partition(basis);
    let mut worst = 0.0f64;
    for &i in &even {
        for &j in &odd {
            worst = worst.max(h.data[(i, j)].norm()).max(h.data[(j, i)].norm());
        }
    }
    if worst > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "operator couples parity sectors (worst element {worst:.2e}); \
             sector-resolved statistics would be meaningless"
        )));
    }
    Ok(())
}

/// Quasienergy gap statistics of the square-wave cycle operator.
///
/// The cycle operator is block-diagonal in parity, so each sector block is
/// diagonalized on its own; under [`SectorPolicy::Full`] the sector
/// spectra are pooled, which reproduces the full-space spectrum exactly.
pub fn level_stats_floquet(
    params: &ModelParams,
    drive: &DriveParams,
    basis: &ProductBasis,
    policy: SectorPolicy,
    trim_fraction: f64,
) -> Result<LevelStatsResult> {
    let h = static_hamiltonian(params, basis);
    let v = drive_operator(drive.amplitude, basis);
    let plus = &h.data + &v.data;
    let minus = &h.data - &v.data;
    let (even, odd) = parity_partition(basis);
    let mut spectra = Vec::with_capacity(2);
    for idx in [&even, &odd] {
        let ha = OperatorMatrix::hermitian(extract_block(&plus, idx));
        let hb = OperatorMatrix::hermitian(extract_block(&minus, idx));
        let u = floquet_operator(&ha, &hb, drive.period)?;
        let spec = floquet_spectrum(&u, drive.period)?;
        spectra.push((idx.len(), spec.quasienergies));
    }
    stats_from_spectra(spectra, policy, trim_fraction)
}

/// Eigenvalue gap statistics of a Hermitian operator.
pub fn level_stats_static(
    h: &OperatorMatrix,
    basis: &ProductBasis,
    policy: SectorPolicy,
    trim_fraction: f64,
) -> Result<LevelStatsResult> {
    h.require_hermitian(1e-10)?;
    match policy {
        SectorPolicy::Full => {
            let levels = linalg::eigvalsh(&h.data)?;
            r_statistic(&levels, trim_fraction)
        }
        SectorPolicy::PerParitySector => {
            require_parity_preserving(h, basis)?;
            let (even, odd) = parity_partition(basis);
            let mut spectra = Vec::with_capacity(2);
            for idx in [&even, &odd] {
                let block = extract_block(&h.data, idx);
                spectra.push((idx.len(), linalg::eigvalsh(&block)?));
            }
            stats_from_spectra(spectra, policy, trim_fraction)
        }
    }
}

fn stats_from_spectra(
    spectra: Vec<(usize, Vec<f64>)>,
    policy: SectorPolicy,
    trim_fraction: f64,
) -> Result<LevelStatsResult> {
    match policy {
        SectorPolicy::Full => {
            let pooled: Vec<f64> = spectra.into_iter().flat_map(|(_, s)| s).collect();
            r_statistic(&pooled, trim_fraction)
        }
        SectorPolicy::PerParitySector => {
            let mut parts = Vec::with_capacity(spectra.len());
            let mut r_values = Vec::new();
            for (dim, levels) in &spectra {
                let ratios = gap_ratios(levels, trim_fraction)?;
                let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
                parts.push((*dim, mean));
                r_values.extend(ratios);
            }
            Ok(LevelStatsResult {
                sector_policy: policy,
                trim_fraction,
                r_values,
                mean_r: weighted_mean(&parts),
            })
        }
    }
}

/// Inverse participation ratio sum |v_k|^4 / (sum |v_k|^2)^2: 1 on a basis
/// state, 1/d on an equal-weight superposition over d states.
pub fn inverse_participation_ratio(state: &Array1<Complex64>) -> f64 {
    let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    let quartic: f64 = state.iter().map(|z| z.norm_sqr().powi(2)).sum();
    quartic / (norm_sqr * norm_sqr)
}

/// IPR of the lowest eigenvector of a Hermitian operator.
pub fn ipr_ground_state(h: &OperatorMatrix) -> Result<f64> {
    h.require_hermitian(1e-10)?;
    let (_, vectors) = linalg::eigh(&h.data)?;
    Ok(inverse_participation_ratio(&vectors.column(0).to_owned()))
}

/// IPR of the global ground state, found sector by sector. Zero-padding a
/// sector vector back to the joint basis leaves the IPR unchanged, so the
/// block eigenvector is used directly.
pub fn ground_state_ipr_sectored(h: &OperatorMatrix, basis: &ProductBasis) -> Result<f64> {
    h.require_hermitian(1e-10)?;
    require_parity_preserving(h, basis)?;
    let (even, odd) = parity_partition(basis);
    let mut best: Option<(f64, f64)> = None;
    for idx in [&even, &odd] {
        let block = extract_block(&h.data, idx);
        let (values, vectors) = linalg::eigh(&block)?;
        let ipr = inverse_participation_ratio(&vectors.column(0).to_owned());
        if best.map_or(true, |(e, _)| values[0] < e) {
            best = Some((values[0], ipr));
        }
    }
    Ok(best.expect("two sectors").1)
}

/// Critical coupling g2 of the effective model as a function of g1.
///
/// With delta = (T Omega)^2 / 3 the drive renormalizes the couplings and
/// frequencies of the undriven model, shifting the superradiant boundary
/// g1 + g2 = sqrt(omega omega0) to
///
/// ```text
/// g2_c = chi~ sqrt(omega omega0) - chi g1
/// chi  = (1 + delta) / (1 - delta)
/// chi~ = (1 + delta~) / (1 - delta)
/// delta~ = delta / 2 (omega / omega0 + omega0 / omega)
/// ```
pub fn critical_line(g1: f64, params: &ModelParams, drive: &DriveParams) -> Result<f64> {
    if g1 < 0.0 || !g1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coupling g1 = {g1} must be finite and non-negative"
        )));
    }
    let delta = (drive.period * drive.amplitude).powi(2) / 3.0;
    if (1.0 - delta).abs() < 1e-12 {
        return Err(Error::SingularParameter(format!(
            "drive strength delta = {delta} sits on the pole at 1"
        )));
    }
    let ratio = params.omega / params.omega0 + params.omega0 / params.omega;
    let delta_t = delta / 2.0 * ratio;
    let chi = (1.0 + delta) / (1.0 - delta);
    let chi_t = (1.0 + delta_t) / (1.0 - delta);
    Ok(chi_t * (params.omega * params.omega0).sqrt() - chi * g1)
}

/// Full spectral span max - min of a Hermitian operator.
pub fn bandwidth(h: &OperatorMatrix) -> Result<f64> {
    h.require_hermitian(1e-10)?;
    let levels = linalg::eigvalsh(&h.data)?;
    Ok(levels[levels.len() - 1] - levels[0])
}

/// Spectral span computed on the parity blocks; identical to [`bandwidth`]
/// for parity-preserving operators, at roughly a quarter of the cost.
pub fn bandwidth_sectored(h: &OperatorMatrix, basis: &ProductBasis) -> Result<f64> {
    h.require_hermitian(1e-10)?;
    require_parity_preserving(h, basis)?;
    let (even, odd) = parity_partition(basis);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for idx in [&even, &odd] {
        let block = extract_block(&h.data, idx);
        let levels = linalg::eigvalsh(&block)?;
        lo = lo.min(levels[0]);
        hi = hi.max(levels[levels.len() - 1]);
    }
    Ok(hi - lo)
}

/// Mean of the last quarter (by sample index, at least one sample) of a
/// series. On a log-spaced time grid this is roughly the final decade.
pub fn saturation_value(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "saturation estimate needs at least 4 samples, got {}",
            values.len()
        )));
    }
    let take = (values.len() + 3) / 4;
    let tail = &values[values.len() - take..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Which samples define the entropy plateau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlateauWindow {
    /// Sample positions, 1-based and inclusive: the k-th recorded point.
    Levels { first: usize, last: usize },
    /// Time interval, inclusive at both ends.
    Times { start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingResult {
    /// Mean of the series over the plateau window.
    pub plateau_value: f64,
    /// Saturation reference the threshold interpolates toward.
    pub page_value: f64,
    /// Halfway point between plateau and reference.
    pub threshold: f64,
    /// Log-interpolated crossing time, absent when the series never
    /// sustains a crossing.
    pub tau_star: Option<f64>,
    /// Index k of the sample just below the crossing.
    pub crossing_index: Option<usize>,
    pub no_heating: bool,
}

/// Heating time of an entropy series: the first sustained upward crossing
/// of the halfway threshold between the prethermal plateau and
/// `page_value`.
///
/// The crossing search starts at the plateau window (earlier transients
/// do not count), requires `s[k] <= threshold < s[k + 1]`, and demands the
/// next `sustain` samples stay at or above threshold (clamped at the end
/// of the series). The crossing time interpolates linearly in log time
/// between t_k and t_{k+1}.
pub fn heating_time(
    times: &[f64],
    values: &[f64],
    page_value: f64,
    window: &PlateauWindow,
    sustain: usize,
) -> Result<HeatingResult> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.windows(2).any(|w| w[0] >= w[1]) || times.first().map_or(true, |&t| t <= 0.0) {
        return Err(Error::InvalidArgument(
            "times must be positive and strictly increasing".into(),
        ));
    }
    let in_window: Vec<usize> = match *window {
        PlateauWindow::Levels { first, last } => {
            if first == 0 || last < first {
                return Err(Error::InvalidArgument(format!(
                    "bad level window [{first}, {last}]"
                )));
            }
            (first - 1..last.min(times.len())).collect()
        }
        PlateauWindow::Times { start, end } => {
            if !(start < end) {
                return Err(Error::InvalidArgument(format!(
                    "bad time window [{start}, {end}]"
                )));
            }
            (0..times.len())
                .filter(|&i| times[i] >= start && times[i] <= end)
                .collect()
        }
    };
    if in_window.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "plateau window holds {} samples, need at least 2",
            in_window.len()
        )));
    }
    let plateau_value =
        in_window.iter().map(|&i| values[i]).sum::<f64>() / in_window.len() as f64;
    let threshold = plateau_value + (page_value - plateau_value) / 2.0;
    let start = in_window[0];
    for k in start..values.len().saturating_sub(1) {
        if values[k] <= threshold && threshold < values[k + 1] {
            let tail_end = (k + 1 + sustain).min(values.len());
            if values[k + 1..tail_end].iter().all(|&s| s >= threshold) {
                let f = (threshold - values[k]) / (values[k + 1] - values[k]);
                let log_tau = times[k].ln() + f * (times[k + 1].ln() - times[k].ln());
                return Ok(HeatingResult {
                    plateau_value,
                    page_value,
                    threshold,
                    tau_star: Some(log_tau.exp()),
                    crossing_index: Some(k),
                    no_heating: false,
                });
            }
        }
    }
    Ok(HeatingResult {
        plateau_value,
        page_value,
        threshold,
        tau_star: None,
        crossing_index: None,
        no_heating: true,
    })
}

/// Coordinate transforms for the least-squares fits used by the heating
/// studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// ln y against sqrt(x): exponential in the square root of frequency.
    LogVsSqrtFreq,
    /// ln y against x: plain exponential in frequency.
    LogVsFreq,
    /// ln y against ln x: power law, slope is the exponent.
    PowerLawInEnergy,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    /// Residuals in transformed coordinates, one per input point.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

/// Ordinary least squares in the transformed coordinates of `model`.
pub fn fit(model: FitModel, xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    let tx: Vec<f64> = match model {
        FitModel::LogVsSqrtFreq => {
            if xs.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidArgument(
                    "sqrt-frequency model needs non-negative x".into(),
                ));
            }
            xs.iter().map(|&x| x.sqrt()).collect()
        }
        FitModel::LogVsFreq => xs.to_vec(),
        FitModel::PowerLawInEnergy => {
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(Error::InvalidArgument(
                    "power-law model needs positive x".into(),
                ));
            }
            xs.iter().map(|&x| x.ln()).collect()
        }
    };
    if ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::InvalidArgument(
            "log-scale fits need positive y".into(),
        ));
    }
    let ty: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();

    let n = tx.len() as f64;
    let mx = tx.iter().sum::<f64>() / n;
    let my = ty.iter().sum::<f64>() / n;
    let sxx: f64 = tx.iter().map(|&x| (x - mx).powi(2)).sum();
    if sxx < 1e-24 {
        return Err(Error::SingularParameter(
            "all x values coincide; slope is undefined".into(),
        ));
    }
    let sxy: f64 = tx
        .iter()
        .zip(ty.iter())
        .map(|(&x, &y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = tx
        .iter()
        .zip(ty.iter())
        .map(|(&x, &y)| y - (slope * x + intercept))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ty.iter().map(|&y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(FitResult {
        model,
        slope,
        intercept,
        residuals,
        r_squared,
    })
}
