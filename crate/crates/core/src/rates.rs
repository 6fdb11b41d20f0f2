//! State-dependent per-person infectiousness functions of the total number
//! of active cases.
//!
//! Parameters are kept both as exact rationals (parsed from their decimal
//! text) and as `f64`. The stochastic simulator reads the `f64` side; the
//! hitting-time solver reads the exact side so that exact-rational runs
//! never see binary rounding.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// A nonnegative real parameter known exactly as a rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    exact: BigRational,
    approx: f64,
}

impl Coefficient {
    pub fn from_ratio(exact: BigRational) -> Self {
        let approx = exact.to_f64().unwrap_or(f64::NAN);
        Self { exact, approx }
    }

    /// Exact binary value of `v`.
    pub fn from_f64(v: f64) -> Result<Self> {
        BigRational::from_float(v)
            .map(Self::from_ratio)
            .ok_or_else(|| invalid(format!("{v} is not a finite number")))
    }

    pub fn from_int(v: u64) -> Self {
        Self::from_ratio(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn zero() -> Self {
        Self::from_ratio(BigRational::zero())
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    fn nonnegative(self, what: &str) -> Result<Self> {
        if self.exact.is_negative() {
            Err(invalid(format!("{what} must be nonnegative, got {self}")))
        } else {
            Ok(self)
        }
    }
}

/// Accepts `12`, `0.5`, `-3.25e-2`, `1/3`.
impl FromStr for Coefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s.trim())
            .map(Self::from_ratio)
            .ok_or_else(|| invalid(format!("'{s}' is not a decimal or fraction")))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.is_integer() {
            write!(f, "{}", self.exact.numer())
        } else if let Some(d) = terminating_decimal(&self.exact) {
            f.write_str(&d)
        } else {
            write!(f, "{}/{}", self.exact.numer(), self.exact.denom())
        }
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num.trim())?;
        let den = parse_rational(den.trim())?;
        return (!den.is_zero()).then(|| num / den);
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -r } else { r })
}

fn terminating_decimal(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut places = 0usize;
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    places = places.max(twos).max(fives);
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    let sign = if r.is_negative() { "-" } else { "" };
    Some(format!("{sign}{int}.{frac}"))
}

/// Tabulated profile: value at listed `n` holds until the next listed `n`;
/// beyond the last entry the declared tail constant applies.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    source: Option<PathBuf>,
    entries: Vec<(u64, Coefficient)>,
    tail: Coefficient,
}

impl RateTable {
    pub fn new(entries: Vec<(u64, Coefficient)>, tail: Coefficient) -> Result<Self> {
        if entries.first().map(|e| e.0) != Some(1) {
            return Err(invalid("rate table must start at n = 1"));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(invalid("rate table n values must be strictly increasing"));
        }
        let entries = entries
            .into_iter()
            .map(|(n, c)| c.nonnegative("table value").map(|c| (n, c)))
            .collect::<Result<_>>()?;
        Ok(Self {
            source: None,
            entries,
            tail: tail.nonnegative("table tail")?,
        })
    }

    /// Lines `n value`, then a `tail=c` footer. `#` comments are allowed.
    /// `tail_override` supplies or must agree with the footer.
    pub fn parse(text: &str, tail_override: Option<Coefficient>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut tail: Option<Coefficient> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            if let Some(rest) = line.strip_prefix("tail") {
                let rest = rest.trim_start().strip_prefix('=').ok_or_else(|| {
                    parse_err("expected 'tail=value'".into())
                })?;
                tail = Some(rest.parse().map_err(|_| parse_err(format!("bad tail '{rest}'")))?);
                continue;
            }
            if tail.is_some() {
                return Err(parse_err("entries after the tail footer".into()));
            }
            let mut fields = line.split_whitespace();
            let (Some(n), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err("expected 'n value'".into()));
            };
            let n: u64 = n.parse().map_err(|_| parse_err(format!("bad n '{n}'")))?;
            let v: Coefficient = v.parse().map_err(|_| parse_err(format!("bad value '{v}'")))?;
            entries.push((n, v));
        }
        let tail = match (tail, tail_override) {
            (Some(a), Some(b)) if a != b => {
                return Err(invalid(format!("table declares tail {a} but spec says tail={b}")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(invalid(
                    "table profile needs a declared tail constant so its limit exists",
                ))
            }
        };
        Self::new(entries, tail)
    }

    pub fn load(path: &Path, tail_override: Option<Coefficient>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut t = Self::parse(&text, tail_override)?;
        t.source = Some(path.to_path_buf());
        Ok(t)
    }

    fn lookup(&self, n: u64) -> &Coefficient {
        let last = self.entries.last().expect("table is nonempty");
        if n > last.0 {
            return &self.tail;
        }
        let pos = self.entries.partition_point(|(k, _)| *k <= n);
        &self.entries[pos - 1].1
    }

    fn sup_from(&self, m: u64) -> BigRational {
        let last_n = self.entries.last().expect("table is nonempty").0;
        let mut best = self.tail.exact.clone();
        if m <= last_n {
            best = best.max(self.lookup(m).exact.clone());
            for (k, v) in &self.entries {
                if *k > m && v.exact > best {
                    best = v.exact.clone();
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateProfile {
    Constant(Coefficient),
    /// `high` for `n ≤ switch`, `low` after.
    Step {
        high: Coefficient,
        low: Coefficient,
        switch: u64,
    },
    /// `k / n`
    Harmonic(Coefficient),
    /// `k·ln(1 + n) / n`
    LogOverN(Coefficient),
    Table(RateTable),
    /// `scale·between(n) + within(n)`; the bound-chain rate built from a graph degree.
    Combined {
        scale: Coefficient,
        between: Box<RateProfile>,
        within: Box<RateProfile>,
    },
}

impl RateProfile {
    pub fn constant(c: f64) -> Result<Self> {
        Ok(Self::Constant(Coefficient::from_f64(c)?.nonnegative("constant")?))
    }

    pub fn zero() -> Self {
        Self::Constant(Coefficient::zero())
    }

    /// Parses `const:c`, `step:high,low,n_switch`, `harmonic:k`, `logn:k` or
    /// `table:path[,tail=c]`. Relative table paths resolve against `base_dir`.
    pub fn parse_in(spec: &str, base_dir: Option<&Path>) -> Result<Self> {
        let spec = spec.trim();
        let (family, args) = spec
            .split_once(':')
            .ok_or_else(|| invalid(format!("profile '{spec}' is missing 'family:' prefix")))?;
        let coef = |s: &str, what: &str| -> Result<Coefficient> {
            s.parse::<Coefficient>()?.nonnegative(what)
        };
        match family.trim() {
            "const" => Ok(Self::Constant(coef(args, "constant")?)),
            "harmonic" => Ok(Self::Harmonic(coef(args, "harmonic k")?)),
            "logn" => Ok(Self::LogOverN(coef(args, "logn k")?)),
            "step" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                let [high, low, switch] = parts[..] else {
                    return Err(invalid(format!("step needs 'high,low,n_switch', got '{args}'")));
                };
                let switch: u64 = switch
                    .parse()
                    .map_err(|_| invalid(format!("step switch '{switch}' is not a nonnegative integer")))?;
                Ok(Self::Step {
                    high: coef(high, "step high")?,
                    low: coef(low, "step low")?,
                    switch,
                })
            }
            "table" => {
                let (path, tail) = match args.rsplit_once(",tail=") {
                    Some((p, t)) => (p, Some(coef(t, "table tail")?)),
                    None => (args, None),
                };
                let mut p = PathBuf::from(path.trim());
                if let (true, Some(base)) = (p.is_relative(), base_dir) {
                    p = base.join(p);
                }
                Ok(Self::Table(RateTable::load(&p, tail)?))
            }
            other => Err(invalid(format!("unknown profile family '{other}'"))),
        }
    }

    pub fn value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain(
                "infectiousness is only defined for n >= 1 active cases".into(),
            ));
        }
        Ok(self.value_unchecked(n))
    }

    /// `value` without the `n ≥ 1` check, for hot loops that guarantee it.
    pub(crate) fn value_unchecked(&self, n: u64) -> f64 {
        match self {
            Self::Constant(c) => c.approx,
            Self::Step { high, low, switch } => {
                if n <= *switch {
                    high.approx
                } else {
                    low.approx
                }
            }
            Self::Harmonic(k) => k.approx / n as f64,
            Self::LogOverN(k) => k.approx * (n as f64).ln_1p() / n as f64,
            Self::Table(t) => t.lookup(n).approx,
            Self::Combined { scale, between, within } => {
                scale.approx * between.value_unchecked(n) + within.value_unchecked(n)
            }
        }
    }

    /// Exact value, or `None` when the family takes irrational values.
    pub fn value_exact(&self, n: u64) -> Result<Option<BigRational>> {
        if n == 0 {
            return Err(Error::Domain("infectiousness is only defined for n >= 1".into()));
        }
        Ok(self.exact_unchecked(n))
    }

    fn exact_unchecked(&self, n: u64) -> Option<BigRational> {
        let n_r = || BigRational::from_integer(BigInt::from(n));
        match self {
            Self::Constant(c) => Some(c.exact.clone()),
            Self::Step { high, low, switch } => Some(if n <= *switch {
                high.exact.clone()
            } else {
                low.exact.clone()
            }),
            Self::Harmonic(k) => Some(&k.exact / n_r()),
            Self::LogOverN(k) => k.exact.is_zero().then(BigRational::zero),
            Self::Table(t) => Some(t.lookup(n).exact.clone()),
            Self::Combined { scale, between, within } => {
                Some(&scale.exact * between.exact_unchecked(n)? + within.exact_unchecked(n)?)
            }
        }
    }

    /// True when every value is rational, so exact arithmetic applies.
    pub fn is_rational(&self) -> bool {
        match self {
            Self::LogOverN(k) => k.is_zero(),
            Self::Combined { between, within, .. } => between.is_rational() && within.is_rational(),
            _ => true,
        }
    }

    pub fn limit_at_infinity(&self) -> f64 {
        self.limit_exact().to_f64().unwrap_or(f64::NAN)
    }

    /// Every family has a rational limit.
    pub fn limit_exact(&self) -> BigRational {
        match self {
            Self::Constant(c) => c.exact.clone(),
            Self::Step { low, .. } => low.exact.clone(),
            Self::Harmonic(_) | Self::LogOverN(_) => BigRational::zero(),
            Self::Table(t) => t.tail.exact.clone(),
            Self::Combined { scale, between, within } => {
                &scale.exact * between.limit_exact() + within.limit_exact()
            }
        }
    }

    /// Supremum over `n ≥ 1`. For `Combined` this is the conservative bound
    /// `scale·sup(between) + sup(within)`.
    pub fn supremum(&self) -> f64 {
        self.tail_supremum(1)
    }

    /// Upper bound on `sup_{j ≥ m} value(j)`; exact except for `Combined`,
    /// where it is the sum of the parts' suprema.
    pub fn tail_supremum(&self, m: u64) -> f64 {
        let m = m.max(1);
        match self {
            Self::LogOverN(_) => self.value_unchecked(m),
            Self::Combined { scale, between, within } => {
                scale.approx * between.tail_supremum(m) + within.tail_supremum(m)
            }
            _ => self
                .tail_supremum_exact(m)
                .and_then(|r| r.to_f64())
                .unwrap_or(f64::NAN),
        }
    }

    /// Exact `sup_{j ≥ m} value(j)` (conservative for `Combined`), or `None`
    /// for irrational families. Relies on Harmonic and LogOverN decreasing.
    pub fn tail_supremum_exact(&self, m: u64) -> Option<BigRational> {
        let m = m.max(1);
        match self {
            Self::Constant(c) => Some(c.exact.clone()),
            Self::Step { high, low, switch } => Some(if m > *switch {
                low.exact.clone()
            } else {
                high.exact.clone().max(low.exact.clone())
            }),
            Self::Harmonic(_) => self.exact_unchecked(m),
            Self::LogOverN(k) => k.is_zero().then(BigRational::zero),
            Self::Table(t) => Some(t.sup_from(m)),
            Self::Combined { scale, between, within } => Some(
                &scale.exact * between.tail_supremum_exact(m)? + within.tail_supremum_exact(m)?,
            ),
        }
    }

    /// An `N` with `|value(n) − limit| < eps` for every `n ≥ N`; the smallest
    /// such `N` except for `Combined`, where it merely suffices.
    pub fn settling_index(&self, eps: f64) -> u64 {
        assert!(eps > 0.0, "eps must be positive");
        match self {
            Self::Constant(_) => 1,
            Self::Step { high, low, switch } => {
                if (high.approx - low.approx).abs() < eps {
                    1
                } else {
                    switch + 1
                }
            }
            Self::Harmonic(k) => (k.approx / eps).floor() as u64 + 1,
            Self::LogOverN(_) => {
                // value is decreasing in n: bisect for the first n below eps
                if self.value_unchecked(1) < eps {
                    return 1;
                }
                let (mut lo, mut hi) = (1u64, 2u64);
                while self.value_unchecked(hi) >= eps {
                    lo = hi;
                    hi *= 2;
                }
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if self.value_unchecked(mid) >= eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
            Self::Table(t) => {
                let tail = t.tail.approx;
                let mut settle = t.entries.last().expect("table is nonempty").0 + 1;
                // walk back while entries already sit within eps of the tail
                for (i, (n, v)) in t.entries.iter().enumerate().rev() {
                    if (v.approx - tail).abs() < eps {
                        settle = *n;
                    } else {
                        settle = t.entries.get(i + 1).map_or(n + 1, |e| e.0);
                        break;
                    }
                }
                settle
            }
            Self::Combined { scale, between, within } => {
                let half = eps / 2.0;
                let b = if scale.approx > 0.0 {
                    between.settling_index(half / scale.approx)
                } else {
                    1
                };
                b.max(within.settling_index(half))
            }
        }
    }
}

impl FromStr for RateProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_in(s, None)
    }
}

impl fmt::Display for RateProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "const:{c}"),
            Self::Step { high, low, switch } => write!(f, "step:{high},{low},{switch}"),
            Self::Harmonic(k) => write!(f, "harmonic:{k}"),
            Self::LogOverN(k) => write!(f, "logn:{k}"),
            Self::Table(t) => match &t.source {
                Some(p) => write!(f, "table:{},tail={}", p.display(), t.tail),
                None => write!(f, "table:<inline>,tail={}", t.tail),
            },
            Self::Combined { scale, between, within } => {
                write!(f, "{scale}*({between})+({within})")
            }
        }
    }
}

/// Bound-chain rate `γ(n) = d·β(n) + β^int(n)`. Constant and harmonic pairs
/// collapse to a single profile of the same family.
pub fn gamma_from_graph(beta: &RateProfile, beta_int: &RateProfile, d: f64) -> Result<RateProfile> {
    if d.is_nan() || d < 0.0 {
        return Err(invalid(format!("degree {d} must be nonnegative")));
    }
    let scale = Coefficient::from_f64(d)?;
    let combine = |a: &Coefficient, b: &Coefficient| Coefficient::from_ratio(&scale.exact * &a.exact + &b.exact);
    Ok(match (beta, beta_int) {
        (RateProfile::Constant(a), RateProfile::Constant(b)) => RateProfile::Constant(combine(a, b)),
        (RateProfile::Harmonic(a), RateProfile::Harmonic(b)) => RateProfile::Harmonic(combine(a, b)),
        (RateProfile::LogOverN(a), RateProfile::LogOverN(b)) => RateProfile::LogOverN(combine(a, b)),
        _ if scale.is_zero() => beta_int.clone(),
        _ => RateProfile::Combined {
            scale,
            between: Box::new(beta.clone()),
            within: Box::new(beta_int.clone()),
        },
    })
}
