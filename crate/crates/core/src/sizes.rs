//! Heavy-tailed metaorder length and size laws.
//!
//! The length `N` follows a truncated discrete power law
//! `p(n) = n^{-(1+beta)} / Z` on `[1, n_max]`. Conditional on `N`, the size
//! `Q` is uniform on a sub-interval of `[N q_-, N q_+]` whose width shrinks
//! like `N^{1-gamma}`. The module provides exact pmf/tail computations,
//! O(1)-ish sampling (inverse-CDF table plus analytic tail), the two-sided
//! bracket on `P(n q_- <= Q <= n q_+)`, and the moment-finiteness check for
//! `E[Q^nu]` (finite iff `nu < beta`).

use crate::oracle::KahanSum;
use rand::Rng;
use thiserror::Error;

/// Table size for the inverse-CDF sampler; draws beyond it use the
/// continuous power tail.
const TABLE_LEN: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum SizeError {
    #[error("invalid length-law parameter: {0}")]
    InvalidParameter(String),
}

/// Truncated power-law length distribution.
#[derive(Debug, Clone)]
pub struct LengthLaw {
    beta: f64,
    n_max: u64,
    normalizer: f64,
    /// cdf[k] = P(N <= k+1) for k + 1 <= TABLE_LEN
    cdf: Vec<f64>,
}

impl LengthLaw {
    pub fn new(beta: f64, n_max: u64) -> Result<Self, SizeError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(SizeError::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if n_max == 0 {
            return Err(SizeError::InvalidParameter("n_max must be >= 1".into()));
        }
        let mut z = KahanSum::default();
        // ascending magnitudes: sum from the tail end down
        let mut n = n_max;
        while n >= 1 {
            z.add((n as f64).powf(-(1.0 + beta)));
            if n == 1 {
                break;
            }
            n -= 1;
        }
        let normalizer = z.value();
        let table_len = TABLE_LEN.min(n_max as usize);
        let mut cdf = Vec::with_capacity(table_len);
        let mut acc = KahanSum::default();
        for k in 1..=table_len as u64 {
            acc.add((k as f64).powf(-(1.0 + beta)) / normalizer);
            cdf.push(acc.value().min(1.0));
        }
        Ok(Self {
            beta,
            n_max,
            normalizer,
            cdf,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Asymptotic pmf constant `C` in `p(n) ~ C n^{-(1+beta)}`.
    pub fn pmf_constant(&self) -> f64 {
        1.0 / self.normalizer
    }

    /// `P(N = n)`.
    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 || n > self.n_max {
            0.0
        } else {
            (n as f64).powf(-(1.0 + self.beta)) / self.normalizer
        }
    }

    /// `P(N >= n)` by exact compensated summation.
    pub fn tail(&self, n: u64) -> f64 {
        if n <= 1 {
            return 1.0;
        }
        if n > self.n_max {
            return 0.0;
        }
        let mut acc = KahanSum::default();
        let mut k = self.n_max;
        while k >= n {
            acc.add((k as f64).powf(-(1.0 + self.beta)));
            k -= 1;
        }
        acc.value() / self.normalizer
    }

    /// Exact hazard-type ratio `P(N >= n+1 | N >= n)`; tends to
    /// `(1 + 1/n)^{-beta}` for large `n`.
    pub fn hazard_ratio(&self, n: u64) -> f64 {
        let t = self.tail(n);
        if t == 0.0 {
            0.0
        } else {
            self.tail(n + 1) / t
        }
    }

    /// Draw a length. Table lookup below [`TABLE_LEN`]; above it, inverse
    /// CDF of the continuous tail profile (the discretization bias beyond
    /// the table is O(1/n) and immaterial for tail diagnostics).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        match self
            .cdf
            .binary_search_by(|p| p.partial_cmp(&u).expect("cdf is finite"))
        {
            Ok(i) | Err(i) if i < self.cdf.len() => (i + 1) as u64,
            _ => {
                // u fell in the analytic tail beyond the table
                let t = self.cdf.len() as f64;
                let tail_mass = 1.0 - self.cdf.last().copied().unwrap_or(0.0);
                if tail_mass <= 0.0 {
                    return self.n_max;
                }
                let v = (u - (1.0 - tail_mass)) / tail_mass; // in [0,1)
                                                             // continuous truncated Pareto on [t, n_max]
                let a = t.powf(-self.beta);
                let b = (self.n_max as f64).powf(-self.beta);
                let x = (a - v * (a - b)).powf(-1.0 / self.beta);
                (x.floor() as u64).clamp(1, self.n_max)
            }
        }
    }
}

/// Which end of `[N q_-, N q_+]` the conditional size law is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeAnchor {
    /// Uniform on `[N q_-, N q_- + (q_+ - q_-) N^{1-gamma}]`.
    Lower,
    /// Uniform on `[N q_+ - (q_+ - q_-) N^{1-gamma}, N q_+]`.
    Upper,
}

/// Conditional size law `Q | N`.
#[derive(Debug, Clone)]
pub struct SizeLaw {
    pub gamma: f64,
    pub anchor: SizeAnchor,
    pub q_minus: f64,
    pub q_plus: f64,
}

impl SizeLaw {
    pub fn new(
        gamma: f64,
        anchor: SizeAnchor,
        q_minus: f64,
        q_plus: f64,
    ) -> Result<Self, SizeError> {
        if !(gamma >= 0.0) {
            return Err(SizeError::InvalidParameter(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if !(q_minus > 0.0 && q_minus <= q_plus && q_plus.is_finite()) {
            return Err(SizeError::InvalidParameter(format!(
                "need 0 < q_minus <= q_plus < inf, got [{q_minus}, {q_plus}]"
            )));
        }
        Ok(Self {
            gamma,
            anchor,
            q_minus,
            q_plus,
        })
    }

    /// Support `[a, b]` of `Q | N = n`; always inside `[n q_-, n q_+]`.
    pub fn support(&self, n: u64) -> (f64, f64) {
        let nf = n as f64;
        let width = (self.q_plus - self.q_minus) * nf.powf(1.0 - self.gamma);
        match self.anchor {
            SizeAnchor::Lower => {
                let a = nf * self.q_minus;
                (a, (a + width).min(nf * self.q_plus))
            }
            SizeAnchor::Upper => {
                let b = nf * self.q_plus;
                ((b - width).max(nf * self.q_minus), b)
            }
        }
    }

    /// Draw a size given the length.
    pub fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        let (a, b) = self.support(n);
        if b <= a {
            a
        } else {
            rng.random_range(a..=b)
        }
    }

    /// `E[Q^nu | N = n]` in closed form for the uniform conditional:
    /// `(b^{1+nu} - a^{1+nu}) / ((1+nu)(b-a))`.
    pub fn conditional_moment(&self, n: u64, nu: f64) -> f64 {
        let (a, b) = self.support(n);
        if b <= a {
            return a.powf(nu);
        }
        // log-space to survive large n with large nu
        let p = 1.0 + nu;
        let hi = p * b.ln();
        let lo = p * a.ln();
        let diff = hi.exp() - lo.exp();
        if diff.is_finite() {
            diff / (p * (b - a))
        } else {
            // b^{1+nu} (1 - (a/b)^{1+nu}) / ((1+nu)(b-a)) factored safely
            let ratio = 1.0 - (lo - hi).exp();
            (hi + ratio.ln() - (p * (b - a)).ln()).exp()
        }
    }
}

/// Outcome of the two-sided bracket check at a given `n`:
/// `C'/n^{1+beta} <= P(n q_- <= Q <= n q_+) <= C''/n^{beta}` with
/// `C' = C/2`, `C'' = 2C/beta`.
#[derive(Debug, Clone, Copy)]
pub struct BracketCheck {
    pub probability: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Exact `P(n q_- <= Q <= n q_+)` by summation over the length pmf, and the
/// two-sided power bounds with the asymptotic constants.
pub fn size_bracket_probability(length: &LengthLaw, size: &SizeLaw, n: u64) -> BracketCheck {
    let lo_target = n as f64 * size.q_minus;
    let hi_target = n as f64 * size.q_plus;
    // Q | N = m lives inside [m q_-, m q_+]; overlap is only possible for
    // m in [n q_-/q_+, n q_+/q_-].
    let m_min = ((lo_target / size.q_plus).floor() as u64).max(1);
    let m_max = ((hi_target / size.q_minus).ceil() as u64).min(length.n_max());
    let mut acc = KahanSum::default();
    for m in m_min..=m_max {
        let (a, b) = size.support(m);
        if b <= a {
            // degenerate conditional: point mass at a
            if a >= lo_target && a <= hi_target {
                acc.add(length.pmf(m));
            }
            continue;
        }
        let lo = a.max(lo_target);
        let hi = b.min(hi_target);
        if hi <= lo {
            continue;
        }
        acc.add(length.pmf(m) * (hi - lo) / (b - a));
    }
    let probability = acc.value();
    let c = length.pmf_constant();
    let beta = length.beta();
    let nf = n as f64;
    let lower_bound = 0.5 * c / nf.powf(1.0 + beta);
    let upper_bound = 2.0 * c / (beta * nf.powf(beta));
    BracketCheck {
        probability,
        lower_bound,
        upper_bound,
        lower_ok: probability >= lower_bound,
        upper_ok: probability <= upper_bound,
    }
}

/// Smallest tested `n` from which both bracket bounds hold for all larger
/// tested `n`, or `None` if they never stabilize on the grid.
pub fn bracket_burn_in(length: &LengthLaw, size: &SizeLaw, grid: &[u64]) -> Option<u64> {
    let mut burn_in = None;
    for &n in grid {
        let chk = size_bracket_probability(length, size, n);
        if chk.lower_ok && chk.upper_ok {
            burn_in.get_or_insert(n);
        } else {
            burn_in = None;
        }
    }
    burn_in
}

/// Moment-finiteness verdict for `E[Q^nu]`.
#[derive(Debug, Clone, Copy)]
pub struct MomentExponent {
    /// Fitted decay exponent of `Delta_n = P(N=n) E[Q^nu | N=n]`.
    pub fitted: f64,
    /// Asymptotic value `1 + beta - nu`.
    pub expected: f64,
    /// `E[Q^nu]` finite iff the series `sum Delta_n` converges, i.e. the
    /// exponent exceeds 1 by a clear margin.
    pub finite: bool,
}

/// Exponent margin above 1 required to declare the moment finite; the
/// boundary case `nu = beta` fits exponent 1 and is declared infinite.
const FINITE_MARGIN: f64 = 0.02;

/// Compute `Delta_n` exactly on a log grid of `[n_lo, n_hi]` and fit its
/// log-log decay slope.
pub fn moment_exponent(
    nu: f64,
    length: &LengthLaw,
    size: &SizeLaw,
    n_lo: u64,
    n_hi: u64,
) -> MomentExponent {
    assert!(nu >= 0.0, "nu must be >= 0");
    assert!(n_lo >= 1 && n_hi > n_lo, "need 1 <= n_lo < n_hi");
    let points = 40usize;
    let ratio = (n_hi as f64 / n_lo as f64).powf(1.0 / (points - 1) as f64);
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    let mut n = n_lo as f64;
    for _ in 0..points {
        let ni = (n.round() as u64).clamp(1, length.n_max());
        let delta = length.pmf(ni) * size.conditional_moment(ni, nu);
        if delta > 0.0 {
            xs.push((ni as f64).ln());
            ys.push(delta.ln());
        }
        n *= ratio;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let fitted = -(sxy / sxx);
    MomentExponent {
        fitted,
        expected: 1.0 + length.beta() - nu,
        finite: fitted > 1.0 + FINITE_MARGIN,
    }
}

/// Hill tail-index estimate from the top `top_fraction` order statistics.
pub fn hill_estimate(samples: &[f64], top_fraction: f64) -> f64 {
    assert!(top_fraction > 0.0 && top_fraction < 1.0);
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| *v > 0.0).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k =
        ((sorted.len() as f64 * top_fraction) as usize).clamp(1, sorted.len().saturating_sub(1));
    let x_k = sorted[k];
    if x_k <= 0.0 {
        return f64::NAN;
    }
    let sum_log: f64 = sorted[..k].iter().map(|x| (x / x_k).ln()).sum();
    k as f64 / sum_log
}

/// True when a metaorder with index `rho` keeps `E[Q^rho]` finite under the
/// given laws: the admissibility gate for combining a `RhoLaw` support with
/// a length law.
pub fn rho_admissible(rho: f64, length: &LengthLaw, size: &SizeLaw) -> bool {
    moment_exponent(rho, length, size, 1_000, 1_000_000).finite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn pmf_normalizes_to_one() {
        for &beta in &[0.5, 1.5, 3.0] {
            let law = LengthLaw::new(beta, 100_000).unwrap();
            let mut acc = KahanSum::default();
            let mut n = law.n_max();
            while n >= 1 {
                acc.add(law.pmf(n));
                n -= 1;
            }
            assert!(
                (acc.value() - 1.0).abs() < 1e-12,
                "beta {beta}: sum = {}",
                acc.value()
            );
        }
    }

    #[test]
    fn hazard_ratio_matches_power_form() {
        for &beta in &[0.5, 1.5, 3.0] {
            let law = LengthLaw::new(beta, 10_000_000).unwrap();
            let n = 1000u64;
            let target = (1.0 + 1.0 / n as f64).powf(-beta);
            let got = law.hazard_ratio(n);
            assert!(
                (got - target).abs() < 1e-3,
                "beta {beta}: hazard {got} vs {target}"
            );
        }
    }

    #[test]
    fn degenerate_truncation_samples_one() {
        let law = LengthLaw::new(1.5, 1).unwrap();
        let mut rng = stream(5, 0);
        for _ in 0..100 {
            assert_eq!(law.sample(&mut rng), 1);
        }
    }

    #[test]
    fn sampler_matches_pmf_at_small_n() {
        let law = LengthLaw::new(1.5, 10_000_000).unwrap();
        let mut rng = stream(17, 0);
        let draws = 200_000;
        let mut count_1 = 0usize;
        let mut count_2 = 0usize;
        for _ in 0..draws {
            match law.sample(&mut rng) {
                1 => count_1 += 1,
                2 => count_2 += 1,
                _ => {}
            }
        }
        let f1 = count_1 as f64 / draws as f64;
        let f2 = count_2 as f64 / draws as f64;
        assert!((f1 - law.pmf(1)).abs() < 5e-3, "freq(1) = {f1}");
        assert!((f2 - law.pmf(2)).abs() < 5e-3, "freq(2) = {f2}");
    }

    #[test]
    fn hill_recovers_beta() {
        let law = LengthLaw::new(1.5, 10_000_000).unwrap();
        let mut rng = stream(23, 0);
        let samples: Vec<f64> = (0..1_000_000)
            .map(|_| law.sample(&mut rng) as f64)
            .collect();
        let xi = hill_estimate(&samples, 0.01);
        assert!((1.4..=1.6).contains(&xi), "Hill estimate = {xi}");
    }

    #[test]
    fn size_support_within_global_bracket() {
        let law = SizeLaw::new(0.5, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        let mut rng = stream(31, 0);
        for &n in &[1u64, 10, 1000] {
            for _ in 0..1000 {
                let q = law.sample(n, &mut rng);
                assert!(q >= n as f64 * 1.0 - 1e-12 && q <= n as f64 * 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn gamma_zero_spans_full_range() {
        let law = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        let (a, b) = law.support(100);
        assert_relative_eq!(a, 100.0);
        assert_relative_eq!(b, 200.0);
    }

    #[test]
    fn large_gamma_collapses_to_anchor() {
        let law = SizeLaw::new(10.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        let (a, b) = law.support(100);
        assert!(b - a < 1e-6, "width = {}", b - a);
        assert_relative_eq!(a, 100.0);
        let upper = SizeLaw::new(10.0, SizeAnchor::Upper, 1.0, 2.0).unwrap();
        let (a, b) = upper.support(100);
        assert!(b - a < 1e-6);
        assert_relative_eq!(b, 200.0);
    }

    #[test]
    fn bracket_bounds_hold() {
        let length = LengthLaw::new(1.5, 10_000_000).unwrap();
        let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        for &n in &[100u64, 300, 1000] {
            let chk = size_bracket_probability(&length, &size, n);
            assert!(chk.lower_ok, "lower bound fails at n = {n}: {chk:?}");
            assert!(chk.upper_ok, "upper bound fails at n = {n}: {chk:?}");
        }
    }

    #[test]
    fn bracket_degenerate_child_range() {
        // q- == q+: P(n q- <= Q <= n q+) = P(N = n)
        let length = LengthLaw::new(1.5, 100_000).unwrap();
        let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 1.0).unwrap();
        let chk = size_bracket_probability(&length, &size, 500);
        assert_relative_eq!(chk.probability, length.pmf(500), max_relative = 1e-12);
    }

    #[test]
    fn bracket_slope_between_exponents() {
        let length = LengthLaw::new(1.5, 10_000_000).unwrap();
        let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut n = 100f64;
        while n <= 10_000.0 {
            let chk = size_bracket_probability(&length, &size, n as u64);
            xs.push(n.ln());
            ys.push(chk.probability.ln());
            n *= 1.6;
        }
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        // true decay sits at the upper-bound rate n^{-beta}; allow the fit
        // a small margin around the bracket
        assert!(
            (-2.55..=-1.45).contains(&slope),
            "log-log slope = {slope}, expected near [-(1+beta), -beta]"
        );
    }

    #[test]
    fn moment_exponents_and_verdicts() {
        let length = LengthLaw::new(1.5, 10_000_000).unwrap();
        let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        let cases = [
            (1.0, 1.5, true),  // nu < beta: finite
            (1.5, 1.0, false), // boundary: infinite
            (2.0, 0.5, false), // nu > beta: infinite
        ];
        for (nu, expected, finite) in cases {
            let me = moment_exponent(nu, &length, &size, 1_000, 1_000_000);
            assert!(
                (me.fitted - expected).abs() < 0.05,
                "nu {nu}: fitted {} vs {expected}",
                me.fitted
            );
            assert_eq!(me.finite, finite, "nu {nu}: {me:?}");
        }
    }

    #[test]
    fn moment_boundary_grid() {
        for &beta in &[0.5, 1.5, 3.0] {
            let length = LengthLaw::new(beta, 10_000_000).unwrap();
            let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
            let verdicts: Vec<bool> = [0.5, 0.9, 1.0, 1.1, 2.0]
                .iter()
                .map(|f| moment_exponent(f * beta, &length, &size, 1_000, 1_000_000).finite)
                .collect();
            assert_eq!(
                verdicts,
                vec![true, true, false, false, false],
                "beta = {beta}"
            );
        }
    }

    #[test]
    fn gamma_does_not_change_the_verdict() {
        let length = LengthLaw::new(1.5, 10_000_000).unwrap();
        for &gamma in &[0.0, 0.5, 2.0] {
            for anchor in [SizeAnchor::Lower, SizeAnchor::Upper] {
                let size = SizeLaw::new(gamma, anchor, 1.0, 2.0).unwrap();
                assert!(moment_exponent(1.0, &length, &size, 1_000, 1_000_000).finite);
                assert!(!moment_exponent(2.0, &length, &size, 1_000, 1_000_000).finite);
            }
        }
    }

    #[test]
    fn admissibility_gate() {
        let length = LengthLaw::new(1.5, 10_000_000).unwrap();
        let size = SizeLaw::new(0.0, SizeAnchor::Lower, 1.0, 2.0).unwrap();
        assert!(rho_admissible(0.5, &length, &size));
        assert!(rho_admissible(1.0, &length, &size));
        assert!(!rho_admissible(1.5, &length, &size));
        assert!(!rho_admissible(3.0, &length, &size));
    }
}
