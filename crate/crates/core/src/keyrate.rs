//! Asymptotic secret-key rate for Gaussian-modulated coherent states with
//! heterodyne detection, reverse reconciliation and collective attacks.
//!
//! Detector inefficiency and electronic noise are trusted: they enter only
//! through `χ_het`. The Holevo bound is evaluated from the symplectic
//! spectrum of the shared covariance matrix and of the state conditioned
//! on Bob's measurement.

use crate::error::{invalid, Error, Result};

/// Slack tolerated on discriminants and symplectic eigenvalues before a
/// parameter set is declared unphysical.
pub const PHYSICALITY_SLACK: f64 = 1e-9;

/// Relative size below which `sum² − 4·prod` is treated as exactly zero.
const DEGENERATE_REL: f64 = 1e-12;

/// How `I(A;B)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MutualInfoModel {
    /// `½·log2((v + χ_line)/(1 + χ_line))`: channel noise only.
    #[default]
    LineOnly,
    /// `log2((v + χ_total)/(1 + χ_total))`: both heterodyne quadratures,
    /// including the trusted detector noise.
    TrustedDetector,
}

/// Inputs of the key-rate chain. Defaults are the reference operating point
/// with no asymmetry noise and rates in bits/symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateParams {
    /// Modulation variance `V_A`, SNU.
    pub v_a: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    pub xi_line: f64,
    pub xi_det: f64,
    /// Detection efficiency.
    pub eta: f64,
    /// Electronic noise, SNU.
    pub v_elec: f64,
    pub alpha_db_per_km: f64,
    pub distance_km: f64,
    /// Symbol rate, symbols/s.
    pub baud: f64,
    /// Fraction of symbols used for the key.
    pub frame_ratio: f64,
    pub mi_model: MutualInfoModel,
}

impl Default for KeyRateParams {
    fn default() -> Self {
        Self {
            v_a: 10.0,
            beta: 0.93,
            xi_line: 0.02,
            xi_det: 0.0,
            eta: 0.68,
            v_elec: 0.1,
            alpha_db_per_km: 0.2,
            distance_km: 0.0,
            baud: 1.0,
            frame_ratio: 1.0,
            mi_model: MutualInfoModel::LineOnly,
        }
    }
}

impl KeyRateParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(invalid(msg)) };
        check(self.v_a > 0.0 && self.v_a.is_finite(), "v_a must be > 0")?;
        check((0.0..=1.0).contains(&self.beta), "beta must lie in [0, 1]")?;
        check(self.xi_line >= 0.0 && self.xi_det >= 0.0, "excess noise must be >= 0")?;
        check(self.eta > 0.0 && self.eta <= 1.0, "eta must lie in (0, 1]")?;
        check(self.v_elec >= 0.0, "v_elec must be >= 0")?;
        check(self.alpha_db_per_km >= 0.0 && self.distance_km >= 0.0, "loss and distance must be >= 0")?;
        check(self.baud > 0.0, "baud must be > 0")?;
        check(self.frame_ratio > 0.0 && self.frame_ratio <= 1.0, "frame_ratio must lie in (0, 1]")
    }

    /// `v = V_A + 1`.
    pub fn v(&self) -> f64 {
        self.v_a + 1.0
    }

    /// `ξ_ex = ξ_line + ξ_det`.
    pub fn xi_ex(&self) -> f64 {
        self.xi_line + self.xi_det
    }

    pub fn at_distance(&self, distance_km: f64) -> Self {
        Self { distance_km, ..self.clone() }
    }
}

/// Every intermediate of one key-rate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateBreakdown {
    pub transmittance: f64,
    pub xi_ex: f64,
    pub chi_line: f64,
    pub chi_het: f64,
    pub chi_total: f64,
    /// `I(A;B)`, bits/symbol.
    pub mutual_info: f64,
    pub lambda: [f64; 4],
    /// `χ(B;E)`, bits/symbol.
    pub holevo: f64,
    pub beta: f64,
    pub rate_per_symbol: f64,
    pub rate_bits_per_sec: f64,
    /// Set when a discriminant or eigenvalue undershoot was clamped.
    pub clamped: bool,
}

impl KeyRateBreakdown {
    /// No secret key can be distilled at this operating point.
    pub fn no_key(&self) -> bool {
        self.rate_per_symbol <= 0.0
    }
}

/// Fibre transmittance `10^(−α·d/10)`.
pub fn transmittance(alpha_db_per_km: f64, distance_km: f64) -> f64 {
    10f64.powf(-alpha_db_per_km * distance_km / 10.0)
}

/// `χ_line = 1/T − 1 + ξ_ex`.
pub fn chi_line(t: f64, xi_ex: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid(format!("transmittance must lie in (0, 1], got {t}")));
    }
    if xi_ex < 0.0 {
        return Err(invalid(format!("excess noise must be >= 0, got {xi_ex}")));
    }
    Ok(1.0 / t - 1.0 + xi_ex)
}

/// `χ_het = (2 − η + 2ν_elec)/η`.
pub fn chi_het(eta: f64, v_elec: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if v_elec < 0.0 {
        return Err(invalid(format!("v_elec must be >= 0, got {v_elec}")));
    }
    Ok((2.0 - eta + 2.0 * v_elec) / eta)
}

/// `I(A;B) = ½·log2((v + χ_line)/(1 + χ_line))`.
pub fn mutual_information_het(v: f64, chi_line: f64) -> Result<f64> {
    if !(v >= 1.0) {
        return Err(invalid(format!("v must be >= 1, got {v}")));
    }
    if chi_line < 0.0 {
        return Err(invalid(format!("chi_line must be >= 0, got {chi_line}")));
    }
    Ok(0.5 * ((v + chi_line) / (1.0 + chi_line)).log2())
}

/// `log2((v + χ_total)/(1 + χ_total))`.
pub fn mutual_information_trusted(v: f64, chi_total: f64) -> Result<f64> {
    if !(v >= 1.0) || chi_total < 0.0 {
        return Err(invalid("mutual information needs v >= 1 and chi_total >= 0"));
    }
    Ok(((v + chi_total) / (1.0 + chi_total)).log2())
}

/// Entropy of a thermal mode with mean photon number `x`:
/// `(x+1)·log2(x+1) − x·log2(x)`, with `g(0) = 0`.
pub fn g_entropy(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid(format!("g(x) needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Symplectic eigenvalues and the invariants they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    /// `λ1..λ4`; the first pair from the shared state, the second from the
    /// state conditioned on Bob's heterodyne outcome.
    pub lambda: [f64; 4],
    pub a: f64,
    /// The second shared-state invariant (not the baud rate).
    pub discriminant_b: f64,
    pub c: f64,
    pub d: f64,
    pub clamped: bool,
}

fn clamp_slack(value: f64, floor: f64, what: &str, clamped: &mut bool) -> Result<f64> {
    if value >= floor {
        Ok(value)
    } else if value >= floor - PHYSICALITY_SLACK {
        *clamped = true;
        Ok(floor)
    } else {
        Err(Error::NumericalDomain(format!("{what} = {value:e} below {floor} (unphysical parameters)")))
    }
}

fn pair(sum: f64, prod: f64, what: &str, clamped: &mut bool) -> Result<(f64, f64)> {
    let raw = sum * sum - 4.0 * prod;
    // A discriminant at rounding level means a degenerate pair; its square
    // root would otherwise split the pair by ~1e−8.
    let disc = if raw.abs() <= DEGENERATE_REL * sum * sum {
        *clamped |= raw < 0.0;
        0.0
    } else {
        clamp_slack(raw, 0.0, what, clamped)?.sqrt()
    };
    let hi = (0.5 * (sum + disc)).max(0.0).sqrt();
    let lo = (0.5 * (sum - disc)).max(0.0).sqrt();
    Ok((
        clamp_slack(hi, 1.0, "symplectic eigenvalue", clamped)?,
        clamp_slack(lo, 1.0, "symplectic eigenvalue", clamped)?,
    ))
}

/// Symplectic spectrum for `v`, transmittance `t` and the noise terms.
pub fn symplectic_spectrum(v: f64, t: f64, chi_line: f64, chi_het: f64) -> Result<SymplecticSpectrum> {
    if !(v >= 1.0 && t > 0.0 && t <= 1.0 && chi_line >= 0.0 && chi_het >= 0.0) {
        return Err(invalid("symplectic spectrum needs v >= 1, 0 < T <= 1, chi >= 0"));
    }
    let chi_total = chi_line + chi_het / t;
    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = (t * (1.0 + v * chi_line)).powi(2);
    let sqrt_b = b.sqrt();
    let denom = (t * (v + chi_total)).powi(2);
    let c = (a * chi_het * chi_het
        + b
        + 1.0
        + 2.0 * chi_het * (v * sqrt_b + t * (v + chi_line))
        + 2.0 * t * (v * v - 1.0))
        / denom;
    let d = (v + chi_het * sqrt_b).powi(2) / denom;

    let mut clamped = false;
    let (l1, l2) = pair(a, b, "A^2 - 4B", &mut clamped)?;
    let (l3, l4) = pair(c, d, "C^2 - 4D", &mut clamped)?;
    Ok(SymplecticSpectrum { lambda: [l1, l2, l3, l4], a, discriminant_b: b, c, d, clamped })
}

/// `g((λ1−1)/2) + g((λ2−1)/2) − g((λ3−1)/2) − g((λ4−1)/2)`, floored at 0.
pub fn holevo_bound(lambda: &[f64; 4]) -> Result<f64> {
    let mut ent = [0.0; 4];
    for (e, &l) in ent.iter_mut().zip(lambda) {
        if l < 1.0 - PHYSICALITY_SLACK || !l.is_finite() {
            return Err(Error::NumericalDomain(format!("symplectic eigenvalue {l} < 1")));
        }
        *e = g_entropy(((l - 1.0) / 2.0).max(0.0))?;
    }
    Ok((ent[0] + ent[1] - ent[2] - ent[3]).max(0.0))
}

/// Evaluates the full chain from channel parameters to key rate.
///
/// A negative `rate_per_symbol` is returned as is and means no key.
pub fn key_rate(params: &KeyRateParams) -> Result<KeyRateBreakdown> {
    params.validate()?;
    let v = params.v();
    let t = transmittance(params.alpha_db_per_km, params.distance_km);
    if !(t > 0.0) {
        return Err(Error::NumericalDomain(format!(
            "transmittance underflows at {} km",
            params.distance_km
        )));
    }
    let xi_ex = params.xi_ex();
    let chi_line = chi_line(t, xi_ex)?;
    let chi_het = chi_het(params.eta, params.v_elec)?;
    let chi_total = chi_line + chi_het / t;
    let mutual_info = match params.mi_model {
        MutualInfoModel::LineOnly => mutual_information_het(v, chi_line)?,
        MutualInfoModel::TrustedDetector => mutual_information_trusted(v, chi_total)?,
    };
    let spectrum = symplectic_spectrum(v, t, chi_line, chi_het)?;
    let holevo = holevo_bound(&spectrum.lambda)?;
    let rate_per_symbol = params.beta * mutual_info - holevo;
    Ok(KeyRateBreakdown {
        transmittance: t,
        xi_ex,
        chi_line,
        chi_het,
        chi_total,
        mutual_info,
        lambda: spectrum.lambda,
        holevo,
        beta: params.beta,
        rate_per_symbol,
        rate_bits_per_sec: params.baud * params.frame_ratio * rate_per_symbol,
        clamped: spectrum.clamped,
    })
}

/// Key rate at each of `distances`.
pub fn rate_curve(params: &KeyRateParams, distances: &[f64]) -> Result<Vec<KeyRateBreakdown>> {
    distances.iter().map(|&d| key_rate(&params.at_distance(d))).collect()
}

/// Reach of a key-rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxDistance {
    /// No key even at zero distance.
    NoKey,
    /// The rate first drops to zero at this distance (km).
    Cutoff(f64),
    /// The rate stays positive over the whole grid, which ends here (km).
    BeyondGrid(f64),
}

impl MaxDistance {
    /// Distance in km, with `BeyondGrid` mapped to infinity.
    pub fn reach_km(&self) -> f64 {
        match *self {
            MaxDistance::NoKey => 0.0,
            MaxDistance::Cutoff(d) => d,
            MaxDistance::BeyondGrid(_) => f64::INFINITY,
        }
    }
}

/// Distance at which the key rate first reaches zero.
///
/// The grid `0, step, 2·step, …, max_km` is scanned for the first point
/// without key; the crossing is then bisected down to `resolution_km`
/// and the last distance known to yield a key is returned.
pub fn max_distance(
    params: &KeyRateParams,
    max_km: f64,
    step_km: f64,
    resolution_km: f64,
) -> Result<MaxDistance> {
    if !(resolution_km > 0.0 && step_km > 0.0 && max_km >= 0.0) {
        return Err(invalid("max_distance needs positive step and resolution"));
    }
    let rate = |d: f64| key_rate(&params.at_distance(d)).map(|b| b.rate_per_symbol);
    if rate(0.0)? <= 0.0 {
        return Ok(MaxDistance::NoKey);
    }
    let steps = (max_km / step_km).ceil() as usize;
    let mut prev = 0.0;
    for i in 1..=steps {
        let d = (i as f64 * step_km).min(max_km);
        if rate(d)? <= 0.0 {
            let (mut good, mut bad) = (prev, d);
            while bad - good > resolution_km {
                let mid = 0.5 * (good + bad);
                if rate(mid)? > 0.0 {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(MaxDistance::Cutoff(good));
        }
        prev = d;
    }
    Ok(MaxDistance::BeyondGrid(max_km))
}
