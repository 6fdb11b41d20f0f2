//! Mean hitting times of the one-dimensional birth–death chain
//!
//! ```text
//! n → n + 1  at rate γ(n)·n
//! n → n − 1  at rate δ·n
//! ```
//!
//! which bounds the total infection count of the network epidemic from above
//! (`γ = d_max·β + β^int`) and below (`γ = d_min·β + β^int`).
//!
//! The increments `S_n = E[T_n] − E[T_{n−1}]` satisfy
//! `S_{n+1}·γ(n) − S_n·δ = −1/n` with `S_1 = E[T_1]`. Running that recursion
//! forward divides a tiny difference by a tiny `γ(n)` and loses every digit
//! within a few dozen steps, so the solver instead evaluates the
//! positive-term tail series
//!
//! ```text
//! S_n = (1/δ) Σ_{i ≥ n} (1/i) Π_{j=n}^{i−1} γ(j)/δ
//! ```
//!
//! Truncated at a common upper index `M`, the whole table follows from the
//! nested form `S_n = 1/(δn) + (γ(n)/δ)·S_{n+1}` swept downward from
//! `S_{M+1} = 0`. The neglected remainder is exactly
//! `Π_{j=n}^{M}(γ(j)/δ)·S_{M+1}`, and `S_{M+1} ≤ 1/(δ(M+1)(1 − r))` whenever
//! `γ(j)/δ ≤ r < 1` for all `j > M`; that bound is what `certified` means.
//! The forward recursion is kept as an oracle under exact arithmetic, where
//! it reproduces the truncated series bit for bit.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{invalid, Error, Result};
use crate::graph::{weighted_degrees, LocalityGraph};
use crate::precision::{ExactKernel, FloatKernel, Kernel, Number, PrecisionConfig, PrecisionMode};
use crate::rates::{gamma_from_graph, Coefficient, RateProfile};

#[derive(Clone, Debug, PartialEq)]
pub struct BirthDeathSpec {
    pub gamma: RateProfile,
    pub delta: Coefficient,
    /// Birth rate out of state 0 in the recurrent modification of the chain.
    /// It has no effect on hitting times and is only read by
    /// [`stationary_distribution`].
    pub theta: Coefficient,
}

impl BirthDeathSpec {
    pub fn new(gamma: RateProfile, delta: Coefficient) -> Result<Self> {
        if !delta.exact().is_positive() {
            return Err(invalid(format!("curing rate must be positive, got {delta}")));
        }
        Ok(Self {
            gamma,
            delta,
            theta: Coefficient::from_int(1),
        })
    }

    pub fn with_theta(mut self, theta: Coefficient) -> Result<Self> {
        if !theta.exact().is_positive() {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        self.theta = theta;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceVerdict {
    pub positive_recurrent: bool,
    pub diagnostic: String,
}

/// Decides convergence of `Σ_i (1/i) Π_{j<i} γ(j)/δ`.
///
/// Every profile family sits at or above its limit `L` for all large `n`,
/// so `L < δ` gives convergence by the ratio test, `L > δ` gives growing
/// terms, and `L = δ` leaves terms bounded below by a multiple of `1/i`.
pub fn positive_recurrence_check(spec: &BirthDeathSpec) -> RecurrenceVerdict {
    let limit = spec.gamma.limit_exact();
    let delta = spec.delta.exact();
    let (positive_recurrent, why) = if &limit < delta {
        (true, "ratio test: lim γ(n)/δ < 1")
    } else if &limit > delta {
        (false, "lim γ(n)/δ > 1, series terms grow without bound")
    } else {
        (false, "lim γ(n) = δ, series terms decay like 1/i (harmonic divergence)")
    };
    RecurrenceVerdict {
        positive_recurrent,
        diagnostic: format!(
            "{why} (lim γ = {}, δ = {})",
            Coefficient::from_ratio(limit),
            spec.delta
        ),
    }
}

fn require_recurrent(spec: &BirthDeathSpec) -> Result<()> {
    let v = positive_recurrence_check(spec);
    if v.positive_recurrent {
        Ok(())
    } else {
        Err(Error::Divergent(format!(
            "{}; the curing rate does not exceed the asymptotic infectiousness",
            v.diagnostic
        )))
    }
}

fn check_precision(spec: &BirthDeathSpec, cfg: &PrecisionConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.mode == PrecisionMode::ExactRational && !spec.gamma.is_rational() {
        return Err(Error::Domain(format!(
            "profile {} takes irrational values; exact-rational mode is unavailable",
            spec.gamma
        )));
    }
    Ok(())
}

macro_rules! dispatch {
    ($cfg:expr, $k:ident => $body:expr) => {
        match $cfg.mode {
            PrecisionMode::ExactRational => {
                let $k = &ExactKernel;
                $body
            }
            PrecisionMode::BigFloat { bits } => {
                let $k = &FloatKernel::new(bits)?;
                $body
            }
        }
    };
}

/// A certified (or explicitly uncertified) series evaluation.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: Number,
    /// Largest index `i` whose term was included.
    pub upper_index: u64,
    pub certified: bool,
    /// Bound on the relative error from truncation plus rounding.
    pub rel_error_bound: f64,
}

fn tolerance<K: Kernel>(k: &K, cfg: &PrecisionConfig) -> K::Num {
    let tol = BigRational::from_float(cfg.series_rel_tol).expect("tolerance validated finite");
    k.from_ratio(&(tol / BigRational::from_integer(BigInt::from(2))))
}

/// `E[T_1]`, the mean time from one infection to extinction.
pub fn expected_t1(spec: &BirthDeathSpec, cfg: &PrecisionConfig) -> Result<SeriesValue> {
    s_tail_series(spec, 1, cfg)
}

/// `S_n` from its tail series, summed term by term until the geometric
/// remainder bound drops below the tolerance.
pub fn s_tail_series(spec: &BirthDeathSpec, n: u64, cfg: &PrecisionConfig) -> Result<SeriesValue> {
    if n == 0 {
        return Err(invalid("S_n is defined for n >= 1"));
    }
    check_precision(spec, cfg)?;
    require_recurrent(spec)?;
    dispatch!(cfg, k => forward_series(k, spec, n, cfg))
}

fn forward_series<K: Kernel>(
    k: &K,
    spec: &BirthDeathSpec,
    n: u64,
    cfg: &PrecisionConfig,
) -> Result<SeriesValue> {
    let delta = k.from_ratio(spec.delta.exact());
    let one = k.from_u64(1);
    let half_tol = tolerance(k, cfg);
    let mut term = k.div(&one, &k.mul(&delta, &k.from_u64(n)));
    let mut sum = term.clone();
    let mut i = n;
    let mut certified = false;
    let mut tail_rel = f64::INFINITY;
    loop {
        if k.is_zero(&term) {
            certified = true;
            tail_rel = 0.0;
            break;
        }
        // remainder after term i is at most term·r/(1 − r), r = sup_{j≥i} γ(j)/δ
        let r = k.div(&k.profile_tail_sup(&spec.gamma, i)?, &delta);
        if !k.le(&one, &r) {
            let remainder = k.div(&k.mul(&term, &r), &k.sub(&one, &r));
            let rel = k.div(&remainder, &sum);
            if k.le(&rel, &half_tol) {
                certified = true;
                tail_rel = k.to_f64(&rel);
                break;
            }
        }
        if i - n + 1 >= cfg.max_terms {
            break;
        }
        let g = k.profile_value(&spec.gamma, i)?;
        let ratio = k.div(&k.mul(&g, &k.from_u64(i)), &k.mul(&delta, &k.from_u64(i + 1)));
        term = k.mul(&term, &ratio);
        i += 1;
        sum = k.add(&sum, &term);
    }
    let roundoff = 6.0 * (i - n + 2) as f64 * k.unit_roundoff();
    let certified = certified && roundoff <= cfg.series_rel_tol / 2.0;
    Ok(SeriesValue {
        value: k.wrap(sum),
        upper_index: i,
        certified,
        rel_error_bound: tail_rel + roundoff,
    })
}

/// The truncated sum `(1/δ) Σ_{i=n}^{upper} (1/i) Π_{j=n}^{i−1} γ(j)/δ`.
pub fn s_tail_partial(spec: &BirthDeathSpec, n: u64, upper: u64, cfg: &PrecisionConfig) -> Result<Number> {
    if n == 0 || upper < n {
        return Err(invalid(format!("need 1 <= n <= upper, got n = {n}, upper = {upper}")));
    }
    check_precision(spec, cfg)?;
    dispatch!(cfg, k => {
        let delta = k.from_ratio(spec.delta.exact());
        let mut s = k.zero();
        for j in (n..=upper).rev() {
            let g = k.div(&k.profile_value(&spec.gamma, j)?, &delta);
            let head = k.div(&k.from_u64(1), &k.mul(&delta, &k.from_u64(j)));
            s = k.add(&head, &k.mul(&g, &s));
        }
        Ok(k.wrap(s))
    })
}

/// One step of `S_{n+1} = (S_n·δ − 1/n) / γ(n)`.
///
/// Numerically unstable in floating point: use it as an exact-rational
/// oracle, not as a solver.
pub fn s_recursion_step(spec: &BirthDeathSpec, s_n: &Number, n: u64, cfg: &PrecisionConfig) -> Result<Number> {
    if n == 0 {
        return Err(invalid("recursion starts at n = 1"));
    }
    check_precision(spec, cfg)?;
    dispatch!(cfg, k => recursion_step(k, spec, &k.unwrap(s_n)?, n).map(|v| k.wrap(v)))
}

fn recursion_step<K: Kernel>(k: &K, spec: &BirthDeathSpec, s_n: &K::Num, n: u64) -> Result<K::Num> {
    let g = k.profile_value(&spec.gamma, n)?;
    if k.is_zero(&g) {
        return Err(Error::Domain(format!(
            "γ({n}) = 0: the chain cannot pass {n} upward, the recursion is undefined there"
        )));
    }
    let delta = k.from_ratio(spec.delta.exact());
    let inv_n = k.div(&k.from_u64(1), &k.from_u64(n));
    Ok(k.div(&k.sub(&k.mul(s_n, &delta), &inv_n), &g))
}

/// `S_1..S_{n_max}` by repeated forward recursion from `s1`.
pub fn recursion_sequence(
    spec: &BirthDeathSpec,
    s1: &Number,
    n_max: u64,
    cfg: &PrecisionConfig,
) -> Result<Vec<Number>> {
    check_precision(spec, cfg)?;
    dispatch!(cfg, k => {
        let mut cur = k.unwrap(s1)?;
        let mut out = vec![k.wrap(cur.clone())];
        for n in 1..n_max {
            cur = recursion_step(k, spec, &cur, n)?;
            out.push(k.wrap(cur.clone()));
        }
        Ok(out)
    })
}

#[derive(Clone, Debug)]
pub struct HittingTable {
    pub n_max: u64,
    /// `s[i]` is `S_{i+1}`.
    pub s: Vec<Number>,
    /// `t[i]` is `E[T_{i+1}]`.
    pub t: Vec<Number>,
    /// Row `n` is certified when `S_1..S_n` all met the tolerance.
    pub row_certified: Vec<bool>,
    pub certified: bool,
    /// Common truncation index `M` of every tail series in the table.
    pub truncation_index: u64,
    pub precision: PrecisionConfig,
}

impl HittingTable {
    pub fn s_n(&self, n: u64) -> &Number {
        &self.s[(n - 1) as usize]
    }

    pub fn t_n(&self, n: u64) -> &Number {
        &self.t[(n - 1) as usize]
    }

    /// `n,S_n,T_n,certified`
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n,S_n,T_n,certified")?;
        for (i, ((s, t), ok)) in self.s.iter().zip(&self.t).zip(&self.row_certified).enumerate() {
            writeln!(w, "{},{},{},{}", i + 1, s, t, ok)?;
        }
        Ok(())
    }
}

struct Sweep<N> {
    s: Vec<N>,
    row_ok: Vec<bool>,
    truncation: u64,
}

/// Downward sweep with a growing truncation margin until every row up to
/// `n_max` is certified or `max_terms` is reached.
fn sweep<K: Kernel>(k: &K, spec: &BirthDeathSpec, n_max: u64, cfg: &PrecisionConfig) -> Result<Sweep<K::Num>> {
    let delta = k.from_ratio(spec.delta.exact());
    let one = k.from_u64(1);
    let half_tol = tolerance(k, cfg);
    let cap = cfg.max_terms.max(n_max);
    let mut extra = 32u64;
    loop {
        let upper = (n_max + extra).min(cap);
        let r = k.div(&k.profile_tail_sup(&spec.gamma, upper + 1)?, &delta);
        // rel. remainder of row n ≤ P_n · n / ((M + 1)(1 − r))
        let tail_factor = if k.le(&one, &r) {
            None
        } else {
            Some(k.div(&one, &k.mul(&k.from_u64(upper + 1), &k.sub(&one, &r))))
        };
        let roundoff = 8.0 * (upper + 2) as f64 * k.unit_roundoff();
        let rounding_ok = roundoff + n_max as f64 * k.unit_roundoff() <= cfg.series_rel_tol / 2.0;

        let mut s_vals = Vec::with_capacity(n_max as usize);
        let mut row_ok = vec![false; n_max as usize];
        let mut s = k.zero();
        let mut p = one.clone();
        for j in (1..=upper).rev() {
            let g = k.div(&k.profile_value(&spec.gamma, j)?, &delta);
            let head = k.div(&one, &k.mul(&delta, &k.from_u64(j)));
            s = k.add(&head, &k.mul(&g, &s));
            p = k.mul(&g, &p);
            if j <= n_max {
                let tail_ok = k.is_zero(&p)
                    || tail_factor.as_ref().is_some_and(|f| {
                        k.le(&k.mul(&k.mul(&p, f), &k.from_u64(j)), &half_tol)
                    });
                row_ok[(j - 1) as usize] = tail_ok && rounding_ok;
                s_vals.push(s.clone());
            }
        }
        s_vals.reverse();
        if row_ok.iter().all(|ok| *ok) || upper >= cap || !rounding_ok {
            return Ok(Sweep {
                s: s_vals,
                row_ok,
                truncation: upper,
            });
        }
        extra = extra.saturating_mul(2);
    }
}

/// `E[T_1..T_{n_max}]` with `T_n = Σ_{i≤n} S_i`.
pub fn hitting_table(spec: &BirthDeathSpec, n_max: u64, cfg: &PrecisionConfig) -> Result<HittingTable> {
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    check_precision(spec, cfg)?;
    require_recurrent(spec)?;
    dispatch!(cfg, k => {
        let sw = sweep(k, spec, n_max, cfg)?;
        let mut t = Vec::with_capacity(sw.s.len());
        let mut acc = k.zero();
        for s in &sw.s {
            acc = k.add(&acc, s);
            t.push(k.wrap(acc.clone()));
        }
        let mut row_certified = sw.row_ok;
        let mut all = true;
        for ok in row_certified.iter_mut() {
            all &= *ok;
            *ok = all;
        }
        Ok(HittingTable {
            n_max,
            s: sw.s.into_iter().map(|v| k.wrap(v)).collect(),
            t,
            row_certified,
            certified: all,
            truncation_index: sw.truncation,
            precision: *cfg,
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptotePoint {
    pub n: u64,
    /// `δ·E[T_n] / ln n`
    pub ratio: f64,
    /// `n·S_n`
    pub scaled_increment: f64,
    pub certified: bool,
}

/// `δ·E[T_n]/ln n` at each requested `n ≥ 2`. Only `S` is kept in memory,
/// so `n` in the millions is practical.
pub fn asymptote_ratio(spec: &BirthDeathSpec, n_list: &[u64], cfg: &PrecisionConfig) -> Result<Vec<AsymptotePoint>> {
    if let Some(bad) = n_list.iter().find(|n| **n < 2) {
        return Err(invalid(format!("asymptote ratio needs n >= 2 (ln 1 = 0), got {bad}")));
    }
    let Some(&n_max) = n_list.iter().max() else {
        return Ok(Vec::new());
    };
    check_precision(spec, cfg)?;
    require_recurrent(spec)?;
    let delta = spec.delta.value();
    dispatch!(cfg, k => {
        let sw = sweep(k, spec, n_max, cfg)?;
        let mut wanted: Vec<u64> = n_list.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let mut found = std::collections::HashMap::new();
        let mut acc = k.zero();
        let mut all_ok = true;
        let mut next = 0;
        for (i, s) in sw.s.iter().enumerate() {
            let n = i as u64 + 1;
            acc = k.add(&acc, s);
            all_ok &= sw.row_ok[i];
            if next < wanted.len() && wanted[next] == n {
                let point = AsymptotePoint {
                    n,
                    ratio: delta * k.to_f64(&acc) / (n as f64).ln(),
                    scaled_increment: n as f64 * k.to_f64(s),
                    certified: all_ok,
                };
                found.insert(n, point);
                next += 1;
            }
        }
        Ok(n_list.iter().map(|n| found[n].clone()).collect())
    })
}

/// Stationary law `π_0..π_trunc` of the chain with birth rate θ out of 0,
/// truncated and renormalized. Local balance gives
/// `π_n = θ·π_0·Π_{j<n} γ(j) / (n·δⁿ)`.
pub fn stationary_distribution(spec: &BirthDeathSpec, trunc: usize) -> Result<Vec<f64>> {
    require_recurrent(spec)?;
    if trunc == 0 {
        return Err(invalid("truncation must keep at least states 0 and 1"));
    }
    let delta = spec.delta.value();
    let mut w = Vec::with_capacity(trunc + 1);
    w.push(1.0);
    w.push(spec.theta.value() / delta);
    for n in 1..trunc {
        let g = spec.gamma.value(n as u64)?;
        let next = w[n] * n as f64 * g / ((n + 1) as f64 * delta);
        w.push(next);
    }
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// `E[T_1] = (1/θ)(1/π_0 − 1)` from renewal theory on the recurrent chain.
pub fn renewal_expected_t1(spec: &BirthDeathSpec, trunc: usize) -> Result<f64> {
    let pi = stationary_distribution(spec, trunc)?;
    Ok((1.0 / pi[0] - 1.0) / spec.theta.value())
}

/// Lower bound `((1 + ε/δ)^{N+1} − 1) / ((N + 1)·ε)` on `E[T_1]` when
/// `γ = δ + ε` up to `N` and zero beyond.
pub fn equilibrium_lower_bound(epsilon: f64, delta: f64, big_n: u64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 || delta.is_nan() || delta <= 0.0 || big_n == 0 {
        return Err(invalid("need epsilon > 0, delta > 0, N >= 1"));
    }
    let m = (big_n + 1) as f64;
    Ok(((epsilon / delta).ln_1p() * m).exp_m1() / (m * epsilon))
}

pub fn equilibrium_lower_bound_exact(epsilon: &Coefficient, delta: &Coefficient, big_n: u64) -> Result<BigRational> {
    if !epsilon.exact().is_positive() || !delta.exact().is_positive() || big_n == 0 {
        return Err(invalid("need epsilon > 0, delta > 0, N >= 1"));
    }
    let base = BigRational::one() + epsilon.exact() / delta.exact();
    let m = BigRational::from_integer(BigInt::from(big_n + 1));
    Ok((num_traits::pow(base, (big_n + 1) as usize) - BigRational::one()) / (m * epsilon.exact()))
}

/// Upper (`γ = d_max·β + β^int`) and lower (`γ = d_min·β + β^int`) chains.
pub fn bound_chains_from_graph(
    g: &LocalityGraph,
    beta: &RateProfile,
    beta_int: &RateProfile,
    delta: Coefficient,
) -> Result<(BirthDeathSpec, BirthDeathSpec)> {
    let (d_max, d_min) = weighted_degrees(g);
    let upper = BirthDeathSpec::new(gamma_from_graph(beta, beta_int, d_max)?, delta.clone())?;
    let lower = BirthDeathSpec::new(gamma_from_graph(beta, beta_int, d_min)?, delta)?;
    Ok((upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn spec(gamma: &str, delta: &str) -> BirthDeathSpec {
        BirthDeathSpec::new(gamma.parse().unwrap(), delta.parse().unwrap()).unwrap()
    }

    fn bf() -> PrecisionConfig {
        PrecisionConfig::big_float(256)
    }

    #[test]
    fn recurrence_verdicts() {
        assert!(positive_recurrence_check(&spec("const:0.5", "1")).positive_recurrent);
        assert!(!positive_recurrence_check(&spec("const:1", "1")).positive_recurrent);
        assert!(!positive_recurrence_check(&spec("const:2", "1")).positive_recurrent);
        assert!(positive_recurrence_check(&spec("harmonic:50", "0.1")).positive_recurrent);
        assert!(positive_recurrence_check(&spec("step:5,0.2,100", "1")).positive_recurrent);
        assert!(!positive_recurrence_check(&spec("step:0.5,1,100", "1")).positive_recurrent);
    }

    #[test]
    fn zero_gamma_is_single_death() {
        let v = expected_t1(&spec("const:0", "2"), &bf()).unwrap();
        assert!(v.certified);
        assert_eq!(v.value.to_f64(), 0.5);
        let e = expected_t1(&spec("const:0", "2"), &PrecisionConfig::exact()).unwrap();
        assert_eq!(e.value.as_rational().unwrap(), &BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn constant_half_is_two_ln_two() {
        let v = expected_t1(&spec("const:0.5", "1"), &bf()).unwrap();
        assert!(v.certified);
        assert!((v.value.to_f64() - 2.0 * 2f64.ln()).abs() < 1e-15);
        let v3 = expected_t1(&spec("const:1.5", "3"), &bf()).unwrap();
        assert!((v3.value.to_f64() - 2.0 * 2f64.ln() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn divergent_chain_is_an_error() {
        let err = expected_t1(&spec("const:1", "1"), &bf()).unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
        assert!(err.to_string().contains("infinite expected hitting time"));
        assert!(hitting_table(&spec("const:3", "1"), 5, &bf()).is_err());
    }

    #[test]
    fn zero_gamma_table_is_harmonic_numbers() {
        let t = hitting_table(&spec("const:0", "1"), 50, &PrecisionConfig::exact()).unwrap();
        let mut h = BigRational::zero();
        for n in 1..=50u64 {
            h += BigRational::new(1.into(), BigInt::from(n));
            assert_eq!(t.t_n(n).as_rational().unwrap(), &h);
        }
        assert!(t.certified);
    }

    #[test]
    fn constant_gamma_increment_bounds() {
        let (alpha, delta) = (0.75, 1.0);
        let t = hitting_table(&spec("const:0.75", "1"), 200, &bf()).unwrap();
        for n in 1..=200u64 {
            let s = t.s_n(n).to_f64();
            let nf = n as f64;
            assert!(s >= 1.0 / (delta * nf) && s <= 1.0 / ((delta - alpha) * nf), "n={n} s={s}");
        }
    }

    #[test]
    fn recursion_step_matches_constant_expansion() {
        // S_2 = S_1·δ/α − 1/α for constant γ = α
        let sp = spec("const:1/3", "1");
        let cfg = PrecisionConfig::exact();
        let s1 = expected_t1(&sp, &cfg).unwrap();
        let s2 = s_recursion_step(&sp, &s1.value, 1, &cfg).unwrap();
        let a = BigRational::new(1.into(), 3.into());
        let expect = s1.value.as_rational().unwrap() / &a - BigRational::one() / &a;
        assert_eq!(s2.as_rational().unwrap(), &expect);
    }

    #[test]
    fn recursion_undefined_where_gamma_vanishes() {
        let sp = spec("step:2,0,3", "1");
        let s = Number::Rational(BigRational::one());
        assert!(s_recursion_step(&sp, &s, 4, &PrecisionConfig::exact()).is_err());
    }

    #[test]
    fn exact_mode_rejects_log_profiles() {
        let err = expected_t1(&spec("logn:1", "1"), &PrecisionConfig::exact()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(expected_t1(&spec("logn:1", "1"), &bf()).unwrap().certified);
    }

    #[test]
    fn forward_series_and_sweep_agree() {
        for g in ["harmonic:5", "const:0.9", "step:3,0.5,10", "logn:2"] {
            let sp = spec(g, "1");
            let table = hitting_table(&sp, 40, &bf()).unwrap();
            assert!(table.certified, "{g}");
            for n in [1u64, 2, 7, 40] {
                let fwd = s_tail_series(&sp, n, &bf()).unwrap();
                assert!(fwd.certified);
                let a = fwd.value.to_f64();
                let b = table.s_n(n).to_f64();
                assert!((a - b).abs() <= 1e-14 * b, "{g} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn uncertified_when_precision_too_low_for_tolerance() {
        let cfg = PrecisionConfig::big_float(64).with_tolerance(1e-30);
        let t = hitting_table(&spec("harmonic:5", "1"), 10, &cfg).unwrap();
        assert!(!t.certified);
        assert!((t.t_n(1).to_f64() - (5f64.exp() - 1.0) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_bound_formula() {
        let b = equilibrium_lower_bound(1.0, 1.0, 10).unwrap();
        assert!((b - 2047.0 / 11.0).abs() < 1e-10);
        let exact = equilibrium_lower_bound_exact(&"1".parse().unwrap(), &"1".parse().unwrap(), 10).unwrap();
        assert_eq!(exact, BigRational::new(2047.into(), 11.into()));
        // increasing in both ε and N
        assert!(equilibrium_lower_bound(1.1, 1.0, 10).unwrap() > b);
        assert!(equilibrium_lower_bound(1.0, 1.0, 11).unwrap() > b);
        assert!(equilibrium_lower_bound(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn stationary_law_recovers_t1() {
        let pi = stationary_distribution(&spec("const:0", "1").with_theta("1".parse().unwrap()).unwrap(), 5).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        assert!(pi[2..].iter().all(|p| *p == 0.0));
        let sp = spec("const:0.5", "1");
        let series = expected_t1(&sp, &bf()).unwrap().value.to_f64();
        for theta in ["0.1", "1", "10"] {
            let s = sp.clone().with_theta(theta.parse().unwrap()).unwrap();
            let r = renewal_expected_t1(&s, 400).unwrap();
            assert!((r - series).abs() < 1e-9 * series, "theta={theta}: {r} vs {series}");
        }
    }

    #[test]
    fn asymptote_rejects_n_one() {
        assert!(asymptote_ratio(&spec("const:0", "1"), &[1], &bf()).is_err());
        assert!(asymptote_ratio(&spec("const:0", "1"), &[], &bf()).unwrap().is_empty());
    }

    #[test]
    fn csv_layout() {
        let t = hitting_table(&spec("const:0", "1"), 2, &PrecisionConfig::exact()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,S_n,T_n,certified");
        assert!(lines[1].starts_with("1,1.0000"));
        assert!(lines[2].starts_with("2,5.0000") && lines[2].ends_with(",true"));
    }
}
