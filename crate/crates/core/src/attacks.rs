//! Eavesdropping models: intercept-resend with squeezed states, and the
//! angular detection statistics for an Eve who guesses Bob's frame.

use std::f64::consts::{LN_10, PI, SQRT_2};

use log::debug;
use nalgebra::{Matrix2, Vector2};

use crate::error::{domain, Error, Result};
use crate::security::ChannelModel;

/// Shot-noise measurement limit of Bob's detector, SNU.
pub const DEFAULT_DETECTOR_LIMIT: f64 = 0.1;

/// Displacement gain undoing the `1/√2` amplitude split of heterodyne detection.
pub const DEFAULT_RESEND_GAIN: f64 = SQRT_2;

/// Squeezing parameter `r` for a squeezed variance of `-v_db` dB:
/// `10^(-v_db/10) = e^(-2r)`.
pub fn squeezing_r_from_db(v_db: f64) -> Result<f64> {
    if !(v_db >= 0.0) || !v_db.is_finite() {
        return domain(format!("squeezing in dB must be finite and >= 0, got {v_db}"));
    }
    Ok(v_db * LN_10 / 20.0)
}

pub fn squeezing_db_from_r(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("squeezing parameter must be finite and >= 0, got {r}"));
    }
    Ok(r * 20.0 / LN_10)
}

/// Intercept-resend attack: Eve heterodynes in her frame `theta_e` and resends
/// a state squeezed along that frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IRAttackParams {
    theta_e: f64,
    squeezing_db: f64,
    resend_gain: f64,
}

impl IRAttackParams {
    pub fn new(theta_e: f64, squeezing_db: f64, resend_gain: f64) -> Result<Self> {
        if !theta_e.is_finite() {
            return domain("Eve's frame angle must be finite");
        }
        squeezing_r_from_db(squeezing_db)?;
        if !(resend_gain >= 0.0) || !resend_gain.is_finite() {
            return domain(format!("resend gain must be finite and >= 0, got {resend_gain}"));
        }
        Ok(Self { theta_e, squeezing_db, resend_gain })
    }

    pub fn theta_e(&self) -> f64 {
        self.theta_e
    }

    pub fn squeezing_db(&self) -> f64 {
        self.squeezing_db
    }

    pub fn resend_gain(&self) -> f64 {
        self.resend_gain
    }

    pub fn squeezing_r(&self) -> f64 {
        self.squeezing_db * LN_10 / 20.0
    }

    /// Unit vector of Eve's measured quadrature in the `(q, p)` plane.
    pub fn frame(&self) -> Vector2<f64> {
        let (s, c) = self.theta_e.sin_cos();
        Vector2::new(c, s)
    }
}

/// Form of Eve's normalised information as a function of frame mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfoForm {
    /// `cos²(θ_B - θ_E)`: overlap of variances.
    #[default]
    CosSquared,
    /// `|cos(θ_B - θ_E)|`: overlap of amplitudes.
    AbsCos,
}

/// How the two angles combine inside the detection-probability cosine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleCombination {
    /// `θ_E - θ_B`
    #[default]
    Difference,
    /// `θ_E + θ_B`
    Sum,
}

pub fn eve_normalized_information(theta_e: f64, theta_b: f64) -> f64 {
    eve_normalized_information_with(theta_e, theta_b, InfoForm::CosSquared)
}

pub fn eve_normalized_information_with(theta_e: f64, theta_b: f64, form: InfoForm) -> f64 {
    let c = (theta_b - theta_e).cos();
    match form {
        InfoForm::CosSquared => c * c,
        InfoForm::AbsCos => c.abs(),
    }
}

/// A probability forced into `[0, 1]`, remembering whether that took a clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedProbability {
    pub value: f64,
    pub clamped: bool,
}

impl ClampedProbability {
    fn from_raw(raw: f64) -> Self {
        if raw.is_nan() || raw > 1.0 {
            Self { value: 1.0, clamped: true }
        } else if raw < 0.0 {
            Self { value: 0.0, clamped: true }
        } else {
            Self { value: raw, clamped: false }
        }
    }
}

/// `P_E = (1/2π) · V_B / |cos(π + (θ_E - θ_B)/2)|`, clamped to `[0, 1]`.
///
/// The expression diverges where the cosine vanishes (`|θ_E - θ_B| = π`);
/// such points come back as `1` with `clamped` set.
pub fn eve_detection_probability(theta_e: f64, theta_b: f64, v_b_limit: f64) -> ClampedProbability {
    eve_detection_probability_with(theta_e, theta_b, v_b_limit, AngleCombination::Difference)
}

pub fn eve_detection_probability_with(
    theta_e: f64,
    theta_b: f64,
    v_b_limit: f64,
    combination: AngleCombination,
) -> ClampedProbability {
    if v_b_limit == 0.0 {
        return ClampedProbability { value: 0.0, clamped: false };
    }
    let angle = match combination {
        AngleCombination::Difference => theta_e - theta_b,
        AngleCombination::Sum => theta_e + theta_b,
    };
    let denom = (PI + 0.5 * angle).cos().abs();
    let raw = if denom == 0.0 { f64::INFINITY } else { v_b_limit / (2.0 * PI * denom) };
    let p = ClampedProbability::from_raw(raw);
    if p.clamped {
        debug!("detection probability clamped: raw {raw:e} at theta_e={theta_e}, theta_b={theta_b}");
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub p_detect: f64,
    pub eve_info_normalized: f64,
    /// `|θ_B - θ_E|`
    pub delta_theta: f64,
    pub clamped: bool,
}

pub fn detection_report(
    theta_e: f64,
    theta_b: f64,
    v_b_limit: f64,
    combination: AngleCombination,
    form: InfoForm,
) -> DetectionReport {
    let p = eve_detection_probability_with(theta_e, theta_b, v_b_limit, combination);
    DetectionReport {
        p_detect: p.value,
        eve_info_normalized: eve_normalized_information_with(theta_e, theta_b, form),
        delta_theta: (theta_b - theta_e).abs(),
        clamped: p.clamped,
    }
}

/// Bob's aggregate detection probability: the mean of per-resolution-bin
/// probabilities (bin count as normalisation).
pub fn p_bob_aggregate(resolution_probs: &[f64]) -> Result<f64> {
    if resolution_probs.is_empty() {
        return Err(Error::Argument("no resolution bins to aggregate".into()));
    }
    if let Some(p) = resolution_probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::Argument(format!("bin probability must be >= 0, got {p}")));
    }
    Ok(resolution_probs.iter().sum::<f64>() / resolution_probs.len() as f64)
}

/// Weighted variant of [`p_bob_aggregate`]; weights are normalised to sum to one.
pub fn p_bob_weighted(resolution_probs: &[f64], weights: &[f64]) -> Result<f64> {
    if resolution_probs.is_empty() || resolution_probs.len() != weights.len() {
        return Err(Error::Argument(format!(
            "need equally many probabilities and weights, got {} and {}",
            resolution_probs.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
        return Err(Error::Argument("weights must be >= 0 with a positive sum".into()));
    }
    Ok(resolution_probs.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>() / total)
}

/// Single-mode Gaussian state: mean quadratures and covariance, SNU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMode {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

/// Covariance `R(θ_E) diag(e^{-2r}, e^{2r}) R(θ_E)ᵀ` of Eve's resent state.
pub fn squeezed_covariance(theta_e: f64, r: f64) -> Matrix2<f64> {
    let (s, c) = theta_e.sin_cos();
    let u = Vector2::new(c, s);
    let v = Vector2::new(-s, c);
    u * u.transpose() * (-2.0 * r).exp() + v * v.transpose() * (2.0 * r).exp()
}

/// State Eve resends after obtaining heterodyne outcome `eve_estimate`: a
/// minimum-uncertainty state squeezed along her frame, displaced by
/// `resend_gain` times the component of her outcome along that frame.
pub fn ir_resend_state(params: &IRAttackParams, eve_estimate: (f64, f64)) -> GaussianMode {
    let u = params.frame();
    let along = u.dot(&Vector2::new(eve_estimate.0, eve_estimate.1));
    GaussianMode {
        mean: u * (params.resend_gain * along),
        covariance: squeezed_covariance(params.theta_e, params.squeezing_r()),
    }
}

/// Second moments Bob and Alice observe under the intercept-resend model,
/// with Eve at the channel input and Bob measuring along `theta_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResendMoments {
    pub var_bob: f64,
    /// `Cov(cosθ_B q_A + sinθ_B p_A, x_B)`
    pub cov_alice_bob: f64,
    /// `(Cov / V_A)²`
    pub t_hat: f64,
    /// `Var(x_B) - t_hat V_A - 1`
    pub xi_hat: f64,
}

/// Analytic moments of the resend model. Eve's heterodyne outcome is
/// `(α + n)/√2` with `Var(n) = 2` per quadrature (signal plus port vacuum).
pub fn ir_resend_moments(v_a: f64, channel: &ChannelModel, attack: &IRAttackParams, theta_b: f64) -> ResendMoments {
    let t = channel.transmittance();
    let xi = channel.excess_noise();
    let r = attack.squeezing_r();
    let g = attack.resend_gain();
    let (s, c) = (theta_b - attack.theta_e).sin_cos();
    let (c2, s2) = (c * c, s * s);
    let var_bob = t * (0.5 * g * g * c2 * (v_a + 2.0) + (-2.0 * r).exp() * c2 + (2.0 * r).exp() * s2) + (1.0 - t) + xi;
    let cov_alice_bob = t.sqrt() * (g / SQRT_2) * v_a * c2;
    let t_hat = if v_a > 0.0 { (cov_alice_bob / v_a).powi(2) } else { 0.0 };
    ResendMoments { var_bob, cov_alice_bob, t_hat, xi_hat: var_bob - t_hat * v_a - 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn squeezing_conversions() {
        assert_eq!(squeezing_r_from_db(0.0).unwrap(), 0.0);
        let r10 = squeezing_r_from_db(10.0).unwrap();
        assert_abs_diff_eq!(r10, 1.15, epsilon = 0.005);
        assert_abs_diff_eq!((-2.0 * r10).exp(), 0.1, epsilon = 1e-15);
        // 3 dB: r = 3 ln 10 / 20
        assert_abs_diff_eq!(squeezing_r_from_db(3.0).unwrap(), 0.345_387_763_949_106_84, epsilon = 1e-15);
        assert!(squeezing_r_from_db(-1.0).is_err());
        for db in [0.0, 0.5, 3.0, 10.0, 27.3] {
            let back = squeezing_db_from_r(squeezing_r_from_db(db).unwrap()).unwrap();
            assert_abs_diff_eq!(back, db, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalized_information_endpoints() {
        assert_eq!(eve_normalized_information(0.7, 0.7), 1.0);
        assert!(eve_normalized_information(0.2, 0.2 + FRAC_PI_2) < 1e-30);
        let e = 60f64.to_radians();
        assert!(eve_normalized_information(e, 150f64.to_radians()) < 1e-30);
        assert_abs_diff_eq!(eve_normalized_information_with(0.0, 1.0, InfoForm::AbsCos), 1f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn detection_probability_at_alignment() {
        let p = eve_detection_probability(0.4, 0.4, 0.1);
        assert_abs_diff_eq!(p.value, 0.1 / (2.0 * PI), epsilon = 1e-15);
        assert!(!p.clamped);
        assert_eq!(eve_detection_probability(0.4, 1.9, 0.0).value, 0.0);
    }

    #[test]
    fn detection_probability_clamps_divergence() {
        let p = eve_detection_probability(0.0, PI, 0.1);
        assert_eq!(p.value, 1.0);
        assert!(p.clamped);
        let p = eve_detection_probability(0.0, PI - 1e-6, 0.1);
        assert!(p.clamped && p.value == 1.0);
    }

    #[test]
    fn sum_combination_moves_minimum() {
        let e = 0.5;
        let aligned = eve_detection_probability_with(e, -e, 0.1, AngleCombination::Sum);
        assert_abs_diff_eq!(aligned.value, 0.1 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn aggregate_values_and_errors() {
        assert_eq!(p_bob_aggregate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p_bob_aggregate(&[0.37]).unwrap(), 0.37);
        assert!(matches!(p_bob_aggregate(&[]), Err(Error::Argument(_))));
        assert!(p_bob_aggregate(&[-0.1]).is_err());
        assert_abs_diff_eq!(p_bob_weighted(&[0.2, 0.6], &[3.0, 1.0]).unwrap(), 0.3, epsilon = 1e-15);
        assert!(p_bob_weighted(&[0.2], &[1.0, 2.0]).is_err());
    }

    /// Mean over θ_B ∈ [0, 2π) of min(1, c / |cos(Δ/2)|), c = V_B / 2π,
    /// integrated in closed form: the unclamped region contributes
    /// 2c ln(sec a + tan a) with a = arccos c, the clamped one π - 2a.
    fn mean_detection_quadrature(v_b: f64) -> f64 {
        let c = v_b / (2.0 * PI);
        let a = c.acos();
        (2.0 * c * (1.0 / a.cos() + a.tan()).ln() + (PI - 2.0 * a)) / PI
    }

    fn grid_mean(theta_e: f64, n: usize) -> f64 {
        let probs: Vec<f64> =
            (0..n).map(|k| eve_detection_probability(theta_e, 2.0 * PI * k as f64 / n as f64, 0.1).value).collect();
        p_bob_aggregate(&probs).unwrap()
    }

    #[test]
    fn aggregate_converges_to_quadrature() {
        let exact = mean_detection_quadrature(0.1);
        assert_abs_diff_eq!(exact, 0.059_106_606_436_387_245, epsilon = 1e-15);
        assert_abs_diff_eq!(grid_mean(60f64.to_radians(), 100_000), exact, epsilon = 1e-6);
    }

    #[test]
    fn finer_resolution_does_not_lower_detection() {
        let e = 60f64.to_radians();
        let means: Vec<f64> = [8, 16, 64].iter().map(|&n| grid_mean(e, n)).collect();
        assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    }

    #[test]
    fn resend_state_examples() {
        let vac = ir_resend_state(&IRAttackParams::new(0.3, 0.0, 0.0).unwrap(), (4.0, -2.0));
        assert_eq!(vac.mean, Vector2::zeros());
        assert_abs_diff_eq!(vac.covariance, Matrix2::identity(), epsilon = 1e-15);

        let sq = ir_resend_state(&IRAttackParams::new(0.0, 10.0, 1.0).unwrap(), (1.0, 5.0));
        assert_abs_diff_eq!(sq.covariance, Matrix2::new(0.1, 0.0, 0.0, 10.0), epsilon = 1e-14);
        assert_abs_diff_eq!(sq.mean, Vector2::new(1.0, 0.0), epsilon = 1e-15);

        let swapped = ir_resend_state(&IRAttackParams::new(FRAC_PI_2, 10.0, 1.0).unwrap(), (0.0, 0.0));
        assert_abs_diff_eq!(swapped.covariance, Matrix2::new(10.0, 0.0, 0.0, 0.1), epsilon = 1e-14);
    }

    #[test]
    fn resend_moments_limits() {
        let clean = ChannelModel::new(1.0, 0.0).unwrap();
        // classical intercept-resend through a unit channel: two vacuum units of noise
        let m = ir_resend_moments(5.0, &clean, &IRAttackParams::new(0.0, 0.0, SQRT_2).unwrap(), 0.0);
        assert_abs_diff_eq!(m.t_hat, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.xi_hat, 2.0, epsilon = 1e-13);
        // aligned, 10 dB: heterodyne penalty plus the squeezed floor
        let m = ir_resend_moments(5.0, &clean, &IRAttackParams::new(0.3, 10.0, SQRT_2).unwrap(), 0.3);
        assert_abs_diff_eq!(m.var_bob, 5.0 + 2.0 + 0.1, epsilon = 1e-13);
        // orthogonal: only anti-squeezed noise reaches Bob
        let m = ir_resend_moments(5.0, &clean, &IRAttackParams::new(0.0, 10.0, SQRT_2).unwrap(), FRAC_PI_2);
        assert_abs_diff_eq!(m.var_bob, 10.0, epsilon = 1e-12);
        assert!(m.t_hat < 1e-30);
    }

    proptest! {
        #[test]
        fn information_symmetric_and_pi_periodic(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let x = eve_normalized_information(a, b);
            prop_assert!((x - eve_normalized_information(b, a)).abs() < 1e-15);
            prop_assert!((x - eve_normalized_information(a, b + PI)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn detection_minimum_at_alignment(e in -3.0..3.0f64, d in 1e-3..(2.0 * PI - 1e-3)) {
            let at = eve_detection_probability(e, e, 0.1).value;
            prop_assert!(eve_detection_probability(e, e + d, 0.1).value >= at);
        }

        #[test]
        fn resend_covariance_is_minimum_uncertainty(e in -4.0..4.0f64, db in 0.0..20.0f64) {
            let cov = ir_resend_state(&IRAttackParams::new(e, db, 1.0).unwrap(), (0.0, 0.0)).covariance;
            prop_assert!((cov.determinant() - 1.0).abs() < 1e-10);
            prop_assert!((cov - cov.transpose()).amax() < 1e-12);
        }

        #[test]
        fn resend_excess_noise_grows_with_mismatch(e in -3.0..3.0f64) {
            let ch = ChannelModel::new(0.5, 0.05).unwrap();
            let atk = IRAttackParams::new(e, 10.0, SQRT_2).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=32 {
                let d = FRAC_PI_2 * k as f64 / 32.0;
                let xi = ir_resend_moments(5.0, &ch, &atk, e + d).xi_hat;
                prop_assert!(xi >= prev - 1e-12);
                prev = xi;
            }
        }
    }
}
