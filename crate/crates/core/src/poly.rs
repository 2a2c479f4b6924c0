//! Real polynomials and rational functions with simple real poles.
//!
//! Coefficients are stored in ascending degree. Trailing coefficients below
//! `1e-14 * max|coeff|` are trimmed on construction, so `degree()` reflects
//! the numerically meaningful degree.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const TRIM_RELATIVE: f64 = 1e-14;
const POLE_COINCIDENCE: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let max = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            coeffs.clear();
        } else {
            while let Some(&last) = coeffs.last() {
                if last.abs() < TRIM_RELATIVE * max {
                    coeffs.pop();
                } else {
                    break;
                }
            }
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `leading * prod (z - r_i)`.
    pub fn from_roots(roots: &[f64], leading: f64) -> Self {
        let mut coeffs = vec![leading];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with `-1` for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `sum |a_i| |x|^i`, the natural rounding scale for evaluating at `x`.
    pub fn magnitude_at(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if divisor.is_zero() {
            return Err(Error::InvalidArgument("division by the zero polynomial".into()));
        }
        let dd = divisor.coeffs.len() - 1;
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = rem[i + dd] / lead;
            quot[i] = c;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= c * d;
            }
            rem[i + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }

    /// Sorted real roots of a polynomial whose roots are all real and simple.
    ///
    /// Roots are isolated with a Sturm sequence, refined by bisection and
    /// polished with Newton steps.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        let deg = self.degree();
        if deg < 0 {
            return Err(Error::NonRealOrMultipleRoots(
                "the zero polynomial has no isolated roots".into(),
            ));
        }
        if deg == 0 {
            return Ok(Vec::new());
        }
        if let Some(&bad) = self.coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFiniteState(bad));
        }
        let monic = self.scale(1.0 / self.leading());
        if monic.degree() != deg || monic.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::OverflowGuard("coefficients out of range after normalising".into()));
        }
        if deg == 1 {
            return Ok(vec![-monic.coeffs[0]]);
        }

        let chain = sturm_chain(&monic)?;
        let bound = 1.0
            + monic.coeffs[..monic.coeffs.len() - 1]
                .iter()
                .fold(0.0_f64, |m, c| m.max(c.abs()));
        let total = sign_changes(&chain, -bound) - sign_changes(&chain, bound);
        if total != deg as usize {
            return Err(Error::NonRealOrMultipleRoots(format!(
                "Sturm count {total} real roots for degree {deg}"
            )));
        }

        let mut roots = Vec::with_capacity(deg as usize);
        isolate(&monic, &chain, -bound, bound, 0, &mut roots)?;
        if roots.len() != deg as usize {
            return Err(Error::NonRealOrMultipleRoots(format!(
                "isolated {} of {} roots",
                roots.len(),
                deg
            )));
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        Ok(roots)
    }
}

fn sturm_chain(p: &Polynomial) -> Result<Vec<Polynomial>> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1])?;
        // remainders below the rounding floor of the dividend count as zero
        let floor = 1e-11 * chain[n - 2].coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let r = if r.coeffs.iter().all(|c| c.abs() <= floor) {
            Polynomial::zero()
        } else {
            -r
        };
        if r.is_zero() {
            break;
        }
        let done = r.degree() == 0;
        chain.push(r);
        if done {
            break;
        }
    }
    if chain.last().map_or(true, |g| g.degree() > 0) {
        return Err(Error::NonRealOrMultipleRoots(
            "polynomial shares a factor with its derivative".into(),
        ));
    }
    Ok(chain)
}

fn sign_changes(chain: &[Polynomial], x: f64) -> usize {
    let mut count = 0;
    let mut prev = 0.0_f64;
    for s in chain {
        let v = s.eval(x);
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

fn isolate(
    p: &Polynomial,
    chain: &[Polynomial],
    a: f64,
    b: f64,
    depth: usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    let count = sign_changes(chain, a).saturating_sub(sign_changes(chain, b));
    match count {
        0 => Ok(()),
        1 => {
            out.push(refine(p, a, b));
            Ok(())
        }
        _ if depth > 200 || (b - a) <= f64::EPSILON * a.abs().max(b.abs()) => {
            Err(Error::NonRealOrMultipleRoots(format!(
                "cannot separate {count} roots near {a}"
            )))
        }
        _ => {
            let mut mid = 0.5 * (a + b);
            if p.eval(mid) == 0.0 {
                // Sturm counts are half-open; nudge off an exact root
                mid += 1e-3 * (b - a);
            }
            isolate(p, chain, a, mid, depth + 1, out)?;
            isolate(p, chain, mid, b, depth + 1, out)
        }
    }
}

fn refine(p: &Polynomial, mut a: f64, mut b: f64) -> f64 {
    let mut fa = p.eval(a);
    if fa == 0.0 {
        return a;
    }
    let fb = p.eval(b);
    if fb == 0.0 {
        return b;
    }
    let dp = p.derivative();
    if (fa > 0.0) == (fb > 0.0) {
        // no sign change at the ends: the root sits at the rounding floor
        return newton_polish(p, &dp, 0.5 * (a + b), a, b);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    newton_polish(p, &dp, 0.5 * (a + b), a, b)
}

fn newton_polish(p: &Polynomial, dp: &Polynomial, x0: f64, a: f64, b: f64) -> f64 {
    let mut x = x0;
    for _ in 0..3 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval(x) / d;
        if !(a..=b).contains(&next) || p.eval(next).abs() >= p.eval(x).abs() {
            break;
        }
        x = next;
    }
    x
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs.clone())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Finite(Complex64),
    Infinity,
}

impl Point {
    pub fn real(x: f64) -> Self {
        Point::Finite(Complex64::new(x, 0.0))
    }
}

/// Poles and residues in the Weyl-function convention `rho_k = -Res_{z_k} R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidues {
    pub poles: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
    poles: Option<Vec<f64>>,
    residues: Option<Vec<f64>>,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Self {
            num,
            den,
            poles: None,
            residues: None,
        })
    }

    /// Computes and caches the simple real poles and their residues.
    pub fn with_pole_cache(mut self) -> Result<Self> {
        let poles = self.den.real_roots()?;
        check_distinct(&poles)?;
        // den' in product form over the computed roots; monomial evaluation loses digits in clusters
        let lead = self.den.leading();
        let residues = poles
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let slope: f64 = poles
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != k)
                    .map(|(_, &zm)| z - zm)
                    .product();
                self.num.eval(z) / (lead * slope)
            })
            .collect();
        self.poles = Some(poles);
        self.residues = Some(residues);
        Ok(self)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn poles(&self) -> Option<&[f64]> {
        self.poles.as_deref()
    }

    /// Cached residues `Res_{z_k} R` (not negated).
    pub fn residues(&self) -> Option<&[f64]> {
        self.residues.as_deref()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.num.eval_complex(x) / self.den.eval_complex(x)
    }

    /// Pole/residue form of a proper rational function with simple real poles.
    pub fn partial_fractions(&self) -> Result<PoleResidues> {
        if self.num.degree() >= self.den.degree() {
            return Err(Error::InvalidArgument(format!(
                "improper rational function: deg num {} >= deg den {}",
                self.num.degree(),
                self.den.degree()
            )));
        }
        let (poles, residues) = match (&self.poles, &self.residues) {
            (Some(p), Some(r)) => (p.clone(), r.clone()),
            _ => {
                let cached = self.clone().with_pole_cache()?;
                (cached.poles.unwrap(), cached.residues.unwrap())
            }
        };
        Ok(PoleResidues {
            poles,
            rho: residues.into_iter().map(|r| -r).collect(),
        })
    }

    /// Residue of `R(z) dz` at a simple pole or at infinity.
    ///
    /// At infinity this is minus the `1/z` coefficient of the Laurent
    /// expansion, obtained by series division of the top coefficients.
    pub fn residue_at(&self, at: Point) -> Result<Complex64> {
        match at {
            Point::Infinity => Ok(Complex64::new(-self.laurent_inverse_z_coefficient(), 0.0)),
            Point::Finite(z0) => {
                let d = self.den.eval_complex(z0);
                let scale = self.den.magnitude_at(z0.norm()).max(f64::MIN_POSITIVE);
                if d.norm() > 1e-8 * scale {
                    return Err(Error::NotASimplePole(format!("{z0} (denominator {d})")));
                }
                let dd = self.den.derivative();
                let slope = dd.eval_complex(z0);
                if slope.norm() <= 1e-12 * dd.magnitude_at(z0.norm()).max(f64::MIN_POSITIVE) {
                    return Err(Error::NotASimplePole(format!("{z0} (multiple pole)")));
                }
                Ok(self.num.eval_complex(z0) / slope)
            }
        }
    }

    fn laurent_inverse_z_coefficient(&self) -> f64 {
        let m = self.num.degree();
        if m < 0 {
            return 0.0;
        }
        let n = self.den.degree();
        let target = m - n + 1;
        if target < 0 {
            return 0.0;
        }
        // R = z^{m-n} A(w)/B(w), w = 1/z, with A, B the reversed coefficient lists
        let a: Vec<f64> = self.num.coeffs.iter().rev().copied().collect();
        let b: Vec<f64> = self.den.coeffs.iter().rev().copied().collect();
        let mut d = Vec::with_capacity(target as usize + 1);
        for i in 0..=target as usize {
            let mut acc = a.get(i).copied().unwrap_or(0.0);
            for j in 1..=i {
                acc -= b.get(j).copied().unwrap_or(0.0) * d[i - j];
            }
            d.push(acc / b[0]);
        }
        d[target as usize]
    }
}

fn check_distinct(poles: &[f64]) -> Result<()> {
    for w in poles.windows(2) {
        let scale = w[0].abs().max(w[1].abs()).max(1.0);
        if (w[1] - w[0]).abs() <= POLE_COINCIDENCE * scale {
            return Err(Error::MultiplePole(w[0]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(&[-1.0, 0.0, 1.0]).eval(2.0), 3.0);
        assert_eq!(Polynomial::zero().eval(5.0), 0.0);
        // (z-1)(z+1) expanded: p0 = 0, p1 = -1
        let prod = &p(&[-1.0, 1.0]) * &p(&[1.0, 1.0]);
        assert_eq!(prod.coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(prod.eval(3.0), 8.0);
    }

    #[test]
    fn from_roots_examples() {
        assert_eq!(Polynomial::from_roots(&[-1.0, 1.0], 1.0).coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(Polynomial::from_roots(&[], 1.0).coeffs(), &[1.0]);
        assert_eq!(Polynomial::from_roots(&[0.0], 1.0).coeffs(), &[0.0, 1.0]);
        assert_eq!(Polynomial::from_roots(&[2.0], 3.0).degree(), 1);
    }

    #[test]
    fn trimming_and_degree() {
        assert_eq!(Polynomial::zero().degree(), -1);
        assert_eq!(p(&[1.0, 2.0, 1e-20]).degree(), 1);
        assert_eq!(p(&[0.0, 0.0]).degree(), -1);
    }

    #[test]
    fn real_roots_reject_unnormalisable() {
        assert!(p(&[1.0, f64::NAN, 1.0]).real_roots().is_err());
        assert!(p(&[1e-310, 1e-310]).real_roots().is_err());
    }

    #[test]
    fn real_roots_examples() {
        assert_eq!(p(&[-1.0, 0.0, 1.0]).real_roots().unwrap(), vec![-1.0, 1.0]);
        assert_eq!(p(&[0.0, 1.0]).real_roots().unwrap(), vec![0.0]);
        // det(L - zI) for v = 0, c = (1, 1): -z^3 + 2z
        let r = p(&[0.0, 2.0, 0.0, -1.0]).real_roots().unwrap();
        let s = 2f64.sqrt();
        for (got, want) in r.iter().zip([-s, 0.0, s]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn real_roots_rejects_complex_and_double() {
        assert!(matches!(
            p(&[1.0, 0.0, 1.0]).real_roots(),
            Err(Error::NonRealOrMultipleRoots(_))
        ));
        assert!(matches!(
            Polynomial::from_roots(&[1.0, 1.0, 2.0], 1.0).real_roots(),
            Err(Error::NonRealOrMultipleRoots(_))
        ));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p(&[-1.0, 0.0, 1.0]).derivative().coeffs(), &[0.0, 2.0]);
        assert!(p(&[4.0]).derivative().is_zero());
        // p'(1) rho_1 = q(z_1) for the two-site example with q(z) = z
        let dp = p(&[-1.0, 0.0, 1.0]).derivative();
        assert_eq!(dp.eval(1.0) * 0.5, 1.0);
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = p(&[1.0, -2.0, 0.5, 3.0, 1.0]);
        let b = p(&[2.0, 1.0, -1.0]);
        let (q, r) = a.div_rem(&b).unwrap();
        assert!(r.degree() < b.degree());
        let back = &(&q * &b) + &r;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_fraction_examples() {
        // -z / (z^2 - 1)
        let r = RationalFunction::new(p(&[0.0, -1.0]), p(&[-1.0, 0.0, 1.0])).unwrap();
        let pf = r.partial_fractions().unwrap();
        assert_eq!(pf.poles, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(pf.rho[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pf.rho[1], 0.5, epsilon = 1e-15);

        // 1 / (v0 - z)
        let v0 = 0.37;
        let r = RationalFunction::new(p(&[1.0]), p(&[v0, -1.0])).unwrap();
        let pf = r.partial_fractions().unwrap();
        assert_abs_diff_eq!(pf.poles[0], v0, epsilon = 1e-15);
        assert_abs_diff_eq!(pf.rho[0], 1.0, epsilon = 1e-15);

        // -(z - g) / ((z - a)(z - b)) with a < g < b
        let (a, g, b) = (-0.7, 0.2, 1.9);
        let r = RationalFunction::new(
            Polynomial::from_roots(&[g], -1.0),
            Polynomial::from_roots(&[a, b], 1.0),
        )
        .unwrap();
        let pf = r.partial_fractions().unwrap();
        assert_abs_diff_eq!(pf.rho[0], (a - g) / (a - b), epsilon = 1e-14);
        assert_abs_diff_eq!(pf.rho[1], (b - g) / (b - a), epsilon = 1e-14);
        assert!(pf.rho.iter().all(|&x| x > 0.0));
        assert_abs_diff_eq!(pf.rho.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_fractions_multiple_pole() {
        let r = RationalFunction::new(p(&[1.0]), Polynomial::from_roots(&[0.5, 0.5], 1.0)).unwrap();
        assert!(r.partial_fractions().is_err());
    }

    #[test]
    fn residue_examples() {
        let r = RationalFunction::new(p(&[1.0]), p(&[-2.0, 1.0])).unwrap();
        assert_eq!(r.residue_at(Point::real(2.0)).unwrap().re, 1.0);

        let r = RationalFunction::new(p(&[0.0, -1.0]), p(&[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.residue_at(Point::Infinity).unwrap().re, 1.0);

        let (pp, qq) = (0.3, -1.1);
        let r = RationalFunction::new(p(&[1.0]), Polynomial::from_roots(&[pp, qq], 1.0)).unwrap();
        assert_abs_diff_eq!(
            r.residue_at(Point::real(pp)).unwrap().re,
            1.0 / (pp - qq),
            epsilon = 1e-15
        );
    }

    #[test]
    fn residue_at_infinity_improper() {
        // (z^2 + 3z + 1) / (z - 1) = z + 4 + 5/(z - 1): 1/z coefficient is 5
        let r = RationalFunction::new(p(&[1.0, 3.0, 1.0]), p(&[-1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(r.residue_at(Point::Infinity).unwrap().re, -5.0, epsilon = 1e-14);
    }

    #[test]
    fn residue_rejects_regular_point() {
        let r = RationalFunction::new(p(&[1.0]), p(&[-2.0, 1.0])).unwrap();
        assert!(matches!(
            r.residue_at(Point::real(0.0)),
            Err(Error::NotASimplePole(_))
        ));
        let r = RationalFunction::new(p(&[1.0]), Polynomial::from_roots(&[1.0, 1.0], 1.0)).unwrap();
        assert!(matches!(
            r.residue_at(Point::real(1.0)),
            Err(Error::NotASimplePole(_))
        ));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RationalFunction::new(p(&[1.0]), Polynomial::zero()).is_err());
    }
}
