//! Exponent algebra and the amplitude/frequency ladders of one inductive
//! pass. Exponents are exact rationals; the ladders live in log space since
//! the frequencies overflow `f64` after a few levels.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::InductionError;

/// Parses a plain decimal (`"0.15"`, `"-2"`, `"1e-3"`) or a fraction
/// (`"3/20"`) into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exp) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(all);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Exact rational with the decimal value `f64`'s shortest representation
/// prints as, so `0.15` becomes `3/20` rather than its binary expansion.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x}"))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Number of primitive metrics needed in dimension `n`, `n (n + 1) / 2`.
pub fn n_star(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Supremum of admissible Hölder exponents: `1/5` for surfaces,
/// `1 / (2 n_* + 1)` above.
pub fn theta_bound(n: usize) -> BigRational {
    let denom = if n == 2 { 5 } else { 2 * n_star(n) + 1 };
    BigRational::new(BigInt::one(), BigInt::from(denom))
}

fn check_exponents(theta: &BigRational, alpha: &BigRational, n: usize) -> Result<(), InductionError> {
    if n < 2 {
        return Err(InductionError::Dimension(n));
    }
    let bound = theta_bound(n);
    if !theta.is_positive() || theta >= &bound {
        return Err(InductionError::Theta {
            theta: to_f64(theta),
            bound: to_f64(&bound),
        });
    }
    if !alpha.is_positive() || alpha >= &BigRational::one() {
        return Err(InductionError::Alpha(to_f64(alpha)));
    }
    Ok(())
}

/// Growth exponent `b = 1 + 4 alpha theta / (1 - 5 theta)` for `n = 2`, and
/// `1 + 2 n_* alpha theta / (1 - (2 n_* + 1) theta)` otherwise.
pub fn growth_exponent(theta: &BigRational, alpha: &BigRational, n: usize) -> Result<BigRational, InductionError> {
    check_exponents(theta, alpha, n)?;
    let one = BigRational::one();
    let (num, slope) = if n == 2 {
        (BigInt::from(4), BigInt::from(5))
    } else {
        let ns = n_star(n);
        (BigInt::from(2 * ns), BigInt::from(2 * ns + 1))
    };
    let top = BigRational::from_integer(num) * alpha * theta;
    let bottom = &one - BigRational::from_integer(slope) * theta;
    Ok(one + top / bottom)
}

/// `A = exp(ln_base * exponent)`. Keeping the exponent exact lets
/// `A' = A^{b^2}` be checked symbolically.
#[derive(Clone, Debug, PartialEq)]
pub struct Amplitude {
    pub ln_base: f64,
    pub exponent: BigRational,
}

impl Amplitude {
    pub fn new(a: f64) -> Self {
        Self {
            ln_base: a.ln(),
            exponent: BigRational::one(),
        }
    }

    pub fn from_ln(ln_a: f64) -> Self {
        Self {
            ln_base: ln_a,
            exponent: BigRational::one(),
        }
    }

    pub fn ln(&self) -> f64 {
        self.ln_base * to_f64(&self.exponent)
    }

    /// `exp(ln A)`; infinite once `A` leaves the `f64` range.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    pub fn pow(&self, e: &BigRational) -> Self {
        Self {
            ln_base: self.ln_base,
            exponent: &self.exponent * e,
        }
    }
}

/// Exponents handed to the next pass: `theta' = theta / b^2`,
/// `alpha' = alpha / (2 b^2)`, `A' = A^{b^2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentStep {
    pub theta: BigRational,
    pub alpha: BigRational,
    pub b: BigRational,
    pub theta_next: BigRational,
    pub alpha_next: BigRational,
    /// `b^2`, the power taking `A` to `A'`.
    pub amplitude_power: BigRational,
}

pub fn exponent_step(theta: &BigRational, alpha: &BigRational, n: usize) -> Result<ExponentStep, InductionError> {
    let b = growth_exponent(theta, alpha, n)?;
    let b2 = &b * &b;
    Ok(ExponentStep {
        theta: theta.clone(),
        alpha: alpha.clone(),
        theta_next: theta / &b2,
        alpha_next: alpha / (BigRational::from_integer(BigInt::from(2)) * &b2),
        amplitude_power: b2,
        b,
    })
}

/// The chain of `passes` exponent steps starting from `(theta0, alpha0)`;
/// the last `theta_next` is the final exponent `(prod b_j^{-2}) theta0`.
pub fn exponent_chain(
    theta0: &BigRational,
    alpha0: &BigRational,
    n: usize,
    passes: usize,
) -> Result<Vec<ExponentStep>, InductionError> {
    let mut out: Vec<ExponentStep> = Vec::with_capacity(passes);
    let (mut theta, mut alpha) = (theta0.clone(), alpha0.clone());
    for _ in 0..passes {
        let s = exponent_step(&theta, &alpha, n)?;
        theta = s.theta_next.clone();
        alpha = s.alpha_next.clone();
        out.push(s);
    }
    Ok(out)
}

/// Smallest `ln A` for which the ladders started at `delta1` satisfy
/// `delta_{q+1} <= delta_q / 4` and `lambda_{q+1} >= 2 lambda_q`.
///
/// Both ratios improve with `q` once `lambda_1 > 1`, so the first level
/// binds: `(b - 1) ln lambda_1 >= ln 2 / theta`.
pub fn minimal_ln_amplitude(theta: f64, b: f64, delta1: f64) -> f64 {
    std::f64::consts::LN_2 / (theta * (b - 1.0)) + delta1.ln() / (2.0 * theta)
}

#[derive(Clone, Debug)]
pub struct Schedule {
    pub n: usize,
    pub n_star: usize,
    pub exponents: ExponentStep,
    pub amplitude: Amplitude,
    /// `delta[q - 1]` is `delta_q`, for `q = 1..=levels`.
    pub delta: Vec<f64>,
    /// `ln lambda_q`, same indexing.
    pub ln_lambda: Vec<f64>,
}

/// Builds the ladders `delta_1 = max rho^2`, `lambda_q = A delta_q^{-1/(2 theta)}`,
/// `lambda_{q+1} = lambda_q^b` for `q = 1..=levels` and checks the ordering.
pub fn build_schedule(
    amplitude: &Amplitude,
    theta: &BigRational,
    alpha: &BigRational,
    delta1: f64,
    n: usize,
    levels: usize,
) -> Result<Schedule, InductionError> {
    let exponents = exponent_step(theta, alpha, n)?;
    if !(delta1 > 0.0 && delta1.is_finite()) {
        return Err(InductionError::Delta(delta1));
    }
    let th = to_f64(theta);
    let b = to_f64(&exponents.b);
    let ln_a = amplitude.ln();
    let levels = levels.max(1);
    let mut ln_lambda = Vec::with_capacity(levels);
    let mut delta = Vec::with_capacity(levels);
    ln_lambda.push(ln_a - delta1.ln() / (2.0 * th));
    delta.push(delta1);
    for q in 1..levels {
        let l = b * ln_lambda[q - 1];
        ln_lambda.push(l);
        delta.push((2.0 * th * (ln_a - l)).exp());
    }
    let ln4 = 4f64.ln();
    for q in 1..levels {
        let ln_dq = 2.0 * th * (ln_a - ln_lambda[q - 1]);
        let ln_dn = 2.0 * th * (ln_a - ln_lambda[q]);
        let ordered = ln_dn <= ln_dq - ln4 + 1e-12 && ln_lambda[q] >= ln_lambda[q - 1] + std::f64::consts::LN_2 - 1e-12;
        if !ordered {
            let ln_min = minimal_ln_amplitude(th, b, delta1);
            return Err(InductionError::Ordering {
                q,
                minimal_a: ln_min.exp(),
                ln_minimal_a: ln_min,
            });
        }
    }
    Ok(Schedule {
        n,
        n_star: n_star(n),
        exponents,
        amplitude: amplitude.clone(),
        delta,
        ln_lambda,
    })
}

impl Schedule {
    pub fn theta(&self) -> f64 {
        to_f64(&self.exponents.theta)
    }

    pub fn alpha(&self) -> f64 {
        to_f64(&self.exponents.alpha)
    }

    pub fn b(&self) -> f64 {
        to_f64(&self.exponents.b)
    }

    pub fn levels(&self) -> usize {
        self.delta.len()
    }

    /// `delta_q` for `q >= 1`.
    pub fn delta(&self, q: usize) -> f64 {
        self.delta[q - 1]
    }

    pub fn ln_lambda(&self, q: usize) -> f64 {
        self.ln_lambda[q - 1]
    }

    /// `ln r_q = -ln lambda_{q+1}`.
    pub fn ln_radius(&self, q: usize) -> f64 {
        -self.ln_lambda(q + 1)
    }

    /// Mollification exponent of the metric addition at every level,
    /// `kappa = 1 + (2 theta / b)(b - 1 + alpha)`.
    pub fn kappa(&self) -> BigRational {
        let two = BigRational::from_integer(BigInt::from(2));
        let e = &self.exponents;
        BigRational::one() + two * &e.theta / &e.b * (&e.b - BigRational::one() + &e.alpha)
    }

    /// Amplitude base of the next pass, `A^{b^2}`.
    pub fn next_amplitude(&self) -> Amplitude {
        self.amplitude.pow(&self.exponents.amplitude_power)
    }

    pub fn summary(&self) -> ScheduleSummary {
        let e = &self.exponents;
        ScheduleSummary {
            n: self.n,
            theta: e.theta.to_string(),
            alpha: e.alpha.to_string(),
            b: e.b.to_string(),
            theta_next: e.theta_next.to_string(),
            alpha_next: e.alpha_next.to_string(),
            amplitude_power: e.amplitude_power.to_string(),
            theta_f64: self.theta(),
            b_f64: self.b(),
            kappa: to_f64(&self.kappa()),
            ln_amplitude: self.amplitude.ln(),
            delta: self.delta.clone(),
            ln_lambda: self.ln_lambda.clone(),
        }
    }
}

/// Plain-data view of a schedule for reports; rationals print as `p/q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub n: usize,
    pub theta: String,
    pub alpha: String,
    pub b: String,
    pub theta_next: String,
    pub alpha_next: String,
    pub amplitude_power: String,
    pub theta_f64: f64,
    pub b_f64: f64,
    pub kappa: f64,
    pub ln_amplitude: f64,
    pub delta: Vec<f64>,
    pub ln_lambda: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(r("0.15"), BigRational::new(3.into(), 20.into()));
        assert_eq!(r("-2"), BigRational::from_integer((-2).into()));
        assert_eq!(r("1e-3"), BigRational::new(1.into(), 1000.into()));
        assert_eq!(r("2.5E1"), BigRational::from_integer(25.into()));
        assert_eq!(r(" 6/8 "), BigRational::new(3.into(), 4.into()));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational(".").is_none());
        assert_eq!(rational_from_f64(0.1).unwrap(), r("1/10"));
    }

    #[test]
    fn ordering_error_names_a_sufficient_amplitude() {
        let (theta, alpha) = (r("0.15"), r("0.1"));
        let err = build_schedule(&Amplitude::new(10.0), &theta, &alpha, 1.0 / 16.0, 2, 5).unwrap_err();
        let InductionError::Ordering { ln_minimal_a, .. } = err else {
            panic!("expected an ordering error, got {err}");
        };
        let ok = build_schedule(&Amplitude::from_ln(ln_minimal_a + 1e-9), &theta, &alpha, 1.0 / 16.0, 2, 8);
        assert!(ok.is_ok());
        let s = ok.unwrap();
        assert!((s.delta(2) / s.delta(1) - 0.25).abs() < 1e-6);
    }
}
