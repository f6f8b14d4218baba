//! Holomorphic functions on bisectors S_μ = S_μ⁺ ∪ S_μ⁻, with Ψ-class decay
//! metadata, ray-sampled Ψ-norms and Calderón sibling construction.
//!
//! [z] = z·sgn(Re z) maps both sectors to the right half-plane.

use crate::{precond, Error, Result, C64};
use std::f64::consts::PI;
use std::fmt;

pub const DEFAULT_MU: f64 = PI / 4.0;

#[derive(Clone, Debug, PartialEq)]
pub enum HoloFn {
    /// e^{−[z]}
    Sgp,
    ChiPlus,
    ChiMinus,
    /// z^λ with the cut on i(−∞, 0]
    Power(f64),
    /// [z]^N e^{−[z]} (1 + [z])^{−M}
    Bump { n: f64, m: f64 },
    /// (1 + iz)^{−k}
    Resolvent(f64),
    /// ([z]/(1 + [z])²)^δ
    Eta(f64),
    Scaled(C64, Box<HoloFn>),
    /// z ↦ f(tz)
    Dilated(f64, Box<HoloFn>),
    /// z ↦ conj f(conj z)
    Involuted(Box<HoloFn>),
    Product(Box<HoloFn>, Box<HoloFn>),
    Sum(Box<HoloFn>, Box<HoloFn>),
}

/// Ψ_σ^τ decay: order σ at 0 and τ at ∞ (τ = ∞ for exponential decay).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decay {
    pub sigma: f64,
    pub tau: f64,
}

impl Decay {
    pub fn is_psi_plus(&self) -> bool {
        self.sigma > 0.0 && self.tau > 0.0
    }
}

pub fn bracket(z: C64) -> Result<C64> {
    if z.re > 0.0 {
        Ok(z)
    } else if z.re < 0.0 {
        Ok(-z)
    } else {
        Err(Error::Precondition(format!("{z} lies on the imaginary axis, outside the bisector")))
    }
}

impl HoloFn {
    pub fn sgp() -> Self {
        HoloFn::Sgp
    }
    pub fn bump(n: f64, m: f64) -> Self {
        HoloFn::Bump { n, m }
    }
    pub fn scale(self, c: f64) -> Self {
        HoloFn::Scaled(C64::new(c, 0.0), Box::new(self))
    }
    pub fn dilate(self, t: f64) -> Self {
        HoloFn::Dilated(t, Box::new(self))
    }
    pub fn involute(self) -> Self {
        HoloFn::Involuted(Box::new(self))
    }
    pub fn mul(self, g: HoloFn) -> Self {
        HoloFn::Product(Box::new(self), Box::new(g))
    }
    pub fn add(self, g: HoloFn) -> Self {
        HoloFn::Sum(Box::new(self), Box::new(g))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        use HoloFn::*;
        Ok(match self {
            Sgp => (-bracket(z)?).exp(),
            ChiPlus => C64::new(if bracket(z)? == z { 1.0 } else { 0.0 }, 0.0),
            ChiMinus => C64::new(if bracket(z)? == z { 0.0 } else { 1.0 }, 0.0),
            Power(l) => power(z, *l)?,
            Bump { n, m } => {
                let b = bracket(z)?;
                b.powf(*n) * (-b).exp() * (1.0 + b).powf(-*m)
            }
            Resolvent(k) => {
                let w = 1.0 + C64::i() * z;
                if w.norm() == 0.0 {
                    return Err(Error::Numeric("resolvent evaluated at its pole".into()));
                }
                w.powf(-*k)
            }
            Eta(d) => {
                let b = bracket(z)?;
                (b / ((1.0 + b) * (1.0 + b))).powf(*d)
            }
            Scaled(c, f) => c * f.eval(z)?,
            Dilated(t, f) => f.eval(z * *t)?,
            Involuted(f) => f.eval(z.conj())?.conj(),
            Product(f, g) => f.eval(z)? * g.eval(z)?,
            Sum(f, g) => f.eval(z)? + g.eval(z)?,
        })
    }

    pub fn decay(&self) -> Decay {
        use HoloFn::*;
        match self {
            Sgp => Decay { sigma: 0.0, tau: f64::INFINITY },
            ChiPlus | ChiMinus => Decay { sigma: 0.0, tau: 0.0 },
            Power(l) => Decay { sigma: *l, tau: -*l },
            Bump { n, .. } => Decay { sigma: *n, tau: f64::INFINITY },
            Resolvent(k) => Decay { sigma: 0.0, tau: *k },
            Eta(d) => Decay { sigma: *d, tau: *d },
            Scaled(_, f) | Dilated(_, f) | Involuted(f) => f.decay(),
            Product(f, g) => {
                let (a, b) = (f.decay(), g.decay());
                Decay { sigma: a.sigma + b.sigma, tau: a.tau + b.tau }
            }
            Sum(f, g) => {
                let (a, b) = (f.decay(), g.decay());
                Decay { sigma: a.sigma.min(b.sigma), tau: a.tau.min(b.tau) }
            }
        }
    }

    /// True when the function vanishes on an open subset of the bisector.
    pub fn degenerate(&self) -> bool {
        use HoloFn::*;
        match self {
            ChiPlus | ChiMinus => true,
            Scaled(c, f) => c.norm() == 0.0 || f.degenerate(),
            Dilated(_, f) | Involuted(f) => f.degenerate(),
            Product(f, g) => f.degenerate() || g.degenerate(),
            Sum(f, g) => f.degenerate() && g.degenerate(),
            _ => false,
        }
    }

    /// True when f(z) = f(−z), so that f(tD) is a function of −t²Δ.
    pub fn is_even(&self) -> bool {
        use HoloFn::*;
        match self {
            Sgp | Bump { .. } | Eta(_) => true,
            Scaled(_, f) | Dilated(_, f) | Involuted(f) => f.is_even(),
            Product(f, g) | Sum(f, g) => f.is_even() && g.is_even(),
            _ => false,
        }
    }

    /// Parse the CLI grammar: sgp, chi+, chi-, power(λ), bump(N,M), resolvent(k),
    /// eta(δ), scale(c,f), dilate(t,f), tilde(f), mul(f,g), add(f,g).
    pub fn parse(s: &str) -> Result<HoloFn> {
        let mut p = Parser { s: s.as_bytes(), i: 0 };
        let f = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(Error::Format(format!("trailing input in function spec at byte {}", p.i)));
        }
        Ok(f)
    }
}

fn power(z: C64, l: f64) -> Result<C64> {
    if z.norm() == 0.0 {
        return if l > 0.0 { Ok(C64::new(0.0, 0.0)) } else { Err(Error::Numeric("z^λ at 0".into())) };
    }
    // arg in (−π/2, 3π/2): the cut runs along i(−∞, 0]
    let mut a = z.arg();
    if a <= -PI / 2.0 {
        a += 2.0 * PI;
    }
    Ok(C64::from_polar(z.norm().powf(l), a * l))
}

impl fmt::Display for HoloFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use HoloFn::*;
        match self {
            Sgp => write!(f, "sgp"),
            ChiPlus => write!(f, "chi+"),
            ChiMinus => write!(f, "chi-"),
            Power(l) => write!(f, "power({l})"),
            Bump { n, m } => write!(f, "bump({n},{m})"),
            Resolvent(k) => write!(f, "resolvent({k})"),
            Eta(d) => write!(f, "eta({d})"),
            Scaled(c, g) => write!(f, "scale({},{g})", c.re),
            Dilated(t, g) => write!(f, "dilate({t},{g})"),
            Involuted(g) => write!(f, "tilde({g})"),
            Product(a, b) => write!(f, "mul({a},{b})"),
            Sum(a, b) => write!(f, "add({a},{b})"),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn err<T>(&self, what: &str) -> Result<T> {
        Err(Error::Format(format!("function spec: expected {what} at byte {}", self.i)))
    }
    fn eat(&mut self, c: u8) -> Result<()> {
        self.ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            Ok(())
        } else {
            self.err(&format!("'{}'", c as char))
        }
    }
    fn ident(&mut self) -> String {
        self.ws();
        let st = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || b"+-_".contains(&self.s[self.i])) {
            self.i += 1;
        }
        String::from_utf8_lossy(&self.s[st..self.i]).into_owned()
    }
    fn num(&mut self) -> Result<f64> {
        self.ws();
        let st = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || b"+-.eE".contains(&self.s[self.i])) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[st..self.i]).ok().and_then(|t| t.parse().ok()).map_or_else(|| self.err("number"), Ok)
    }
    fn expr(&mut self) -> Result<HoloFn> {
        let name = self.ident();
        Ok(match name.as_str() {
            "sgp" => HoloFn::Sgp,
            "chi+" => HoloFn::ChiPlus,
            "chi-" => HoloFn::ChiMinus,
            "power" | "resolvent" | "eta" => {
                self.eat(b'(')?;
                let v = self.num()?;
                self.eat(b')')?;
                match name.as_str() {
                    "power" => HoloFn::Power(v),
                    "resolvent" => HoloFn::Resolvent(v),
                    _ => HoloFn::Eta(v),
                }
            }
            "bump" => {
                self.eat(b'(')?;
                let n = self.num()?;
                self.eat(b',')?;
                let m = self.num()?;
                self.eat(b')')?;
                HoloFn::bump(n, m)
            }
            "scale" | "dilate" => {
                self.eat(b'(')?;
                let v = self.num()?;
                self.eat(b',')?;
                let f = self.expr()?;
                self.eat(b')')?;
                if name == "scale" {
                    f.scale(v)
                } else {
                    f.dilate(v)
                }
            }
            "tilde" => {
                self.eat(b'(')?;
                let f = self.expr()?;
                self.eat(b')')?;
                f.involute()
            }
            "mul" | "add" => {
                self.eat(b'(')?;
                let f = self.expr()?;
                self.eat(b',')?;
                let g = self.expr()?;
                self.eat(b')')?;
                if name == "mul" {
                    f.mul(g)
                } else {
                    f.add(g)
                }
            }
            _ => return self.err("function name"),
        })
    }
}

/// m_σ^τ(t) = t^σ for t ≤ 1 and t^{−τ} for t ≥ 1.
pub fn comparison_weight(sigma: f64, tau: f64, t: f64) -> f64 {
    if t <= 1.0 {
        t.powf(sigma)
    } else {
        t.powf(-tau)
    }
}

fn rays(mu: f64) -> [f64; 6] {
    [0.0, mu, -mu, PI, PI - mu, PI + mu]
}

fn ray_sup(f: &HoloFn, sigma: f64, tau: f64, mu: f64, samples: usize, lo: f64, hi: f64) -> Result<f64> {
    let mut best = 0.0f64;
    let (a, b) = (lo.ln(), hi.ln());
    for phi in rays(mu) {
        for q in 0..samples {
            let r = (a + (b - a) * q as f64 / (samples - 1) as f64).exp();
            let v = f.eval(C64::from_polar(r, phi))?.norm() / comparison_weight(sigma, tau, r);
            best = best.max(v);
        }
    }
    Ok(best)
}

/// sup over the sampled rays of |f(z)|/m_σ^τ(|z|), |z| log-spaced in [1e−6, 1e6].
pub fn psi_norm(f: &HoloFn, sigma: f64, tau: f64, mu: f64, samples: usize) -> Result<f64> {
    if samples < 64 {
        return precond("Ψ-norm probe needs at least 64 samples per ray");
    }
    ray_sup(f, sigma, tau, mu, samples, 1e-6, 1e6)
}

/// Ψ-norm on [1e−6, 1e6] divided by the same on [1e−3, 1e3]; values far above 1
/// indicate the norm diverges as the sampling window grows.
pub fn psi_growth(f: &HoloFn, sigma: f64, tau: f64, mu: f64) -> Result<f64> {
    let wide = ray_sup(f, sigma, tau, mu, 241, 1e-6, 1e6)?;
    let narrow = ray_sup(f, sigma, tau, mu, 121, 1e-3, 1e3)?;
    Ok(wide / narrow)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: C64,
    pub error: f64,
}

/// Trapezoid rule in u = log t over a window found by scanning outward.
pub fn log_quadrature(g: impl Fn(f64) -> Result<C64>, h: f64) -> Result<Quadrature> {
    let peak = (-40..=40).map(|u| g(u as f64 * 0.5).map(|v| v.norm())).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Quadrature { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    let find = |dir: f64| -> Result<f64> {
        let mut u: f64 = 0.0;
        let mut quiet = 0;
        while u.abs() < 800.0 {
            u += dir * 0.5;
            if g(u)?.norm() < 1e-18 * peak {
                quiet += 1;
                if quiet >= 4 {
                    return Ok(u);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::Numeric("log-quadrature tail does not decay".into()))
    };
    let (a, b) = (find(-1.0)?, find(1.0)?);
    let trap = |h: f64| -> Result<C64> {
        let m = ((b - a) / h).ceil() as usize;
        let hh = (b - a) / m as f64;
        let mut s = (g(a)? + g(b)?) * 0.5;
        for q in 1..m {
            s += g(a + q as f64 * hh)?;
        }
        Ok(s * hh)
    };
    let fine = trap(h)?;
    let coarse = trap(2.0 * h)?;
    Ok(Quadrature { value: fine, error: (fine - coarse).norm() })
}

/// Φ_{ψ,φ}(z) = ∫₀^∞ ψ(tz)φ(tz) dt/t.
pub fn pair_integral(psi: &HoloFn, phi: &HoloFn, z: C64) -> Result<Quadrature> {
    let (a, b) = (psi.decay(), phi.decay());
    if a.sigma + b.sigma <= 0.0 || a.tau + b.tau <= 0.0 {
        return precond("ψφ must decay at both 0 and ∞");
    }
    bracket(z)?;
    log_quadrature(|u| Ok(psi.eval(z * u.exp())? * phi.eval(z * u.exp())?), 0.02)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Exponent N' and scalar a with φ = a·bump(N', 0), when φ has that form.
fn as_bump(phi: &HoloFn) -> Option<(f64, C64)> {
    match phi {
        HoloFn::Sgp => Some((0.0, C64::new(1.0, 0.0))),
        HoloFn::Bump { n, m } if *m == 0.0 => Some((*n, C64::new(1.0, 0.0))),
        HoloFn::Scaled(c, f) => as_bump(f).map(|(n, a)| (n, a * c)),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct Sibling {
    pub psi: HoloFn,
    pub residual: f64,
    pub closed_form: bool,
}

/// Sample points across S_μ used for sibling fits and checks.
pub fn bisector_samples(mu: f64, count: usize) -> Vec<C64> {
    (0..count)
        .map(|q| {
            let frac = (q as f64 + 0.5) / count as f64;
            let r = (frac * 8.0 - 4.0).exp();
            let phi = (2.0 * frac - 1.0) * 0.9 * mu + if q % 2 == 0 { 0.0 } else { PI };
            C64::from_polar(r, phi)
        })
        .collect()
}

/// ψ = c·bump(N, 0) with Φ_{ψ,φ} ≡ 1.
pub fn calderon_sibling(phi: &HoloFn, n: f64) -> Result<Sibling> {
    if phi.degenerate() {
        return precond("vanishes on an open set");
    }
    if let Some((n1, a)) = as_bump(phi) {
        let c = 2f64.powf(n + n1) / gamma(n + n1) / a;
        let psi = HoloFn::Scaled(c, Box::new(HoloFn::bump(n, 0.0)));
        return Ok(Sibling { psi, residual: 0.0, closed_form: true });
    }
    let base = HoloFn::bump(n, 0.0);
    let zs = bisector_samples(DEFAULT_MU, 32);
    let vals: Vec<C64> = zs.iter().map(|&z| pair_integral(&base, phi, z).map(|q| q.value)).collect::<Result<_>>()?;
    let den: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::Numeric("sibling fit: pairing vanishes".into()));
    }
    let c = vals.iter().map(|v| v.conj()).sum::<C64>() / den;
    let residual = vals.iter().map(|v| (c * v - 1.0).norm()).fold(0.0, f64::max);
    Ok(Sibling { psi: HoloFn::Scaled(c, Box::new(base)), residual, closed_form: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert!((HoloFn::Sgp.eval(C64::new(1.0, 0.0)).unwrap().re - (-1f64).exp()).abs() < 1e-15);
        assert!((HoloFn::Sgp.eval(C64::new(-1.0, 0.0)).unwrap().re - (-1f64).exp()).abs() < 1e-15);
        assert!(HoloFn::Sgp.eval(C64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn grammar_roundtrip() {
        let s = "mul(scale(2,bump(1,0)),tilde(dilate(0.5,eta(0.25))))";
        let f = HoloFn::parse(s).unwrap();
        assert_eq!(HoloFn::parse(&f.to_string()).unwrap(), f);
        assert!(HoloFn::parse("bogus(1)").is_err());
    }

    #[test]
    fn sibling_constants() {
        for (n, c) in [(1.0, 2.0), (2.0, 4.0), (3.0, 4.0)] {
            match calderon_sibling(&HoloFn::Sgp, n).unwrap().psi {
                HoloFn::Scaled(k, _) => assert!((k.re - c).abs() < 1e-12),
                _ => unreachable!(),
            }
        }
        assert!(calderon_sibling(&HoloFn::ChiPlus, 1.0).is_err());
    }

    #[test]
    fn quarter_integral() {
        let b = HoloFn::bump(1.0, 0.0);
        for z in bisector_samples(DEFAULT_MU, 8) {
            let q = pair_integral(&b, &b, z).unwrap();
            assert!((q.value - 0.25).norm() < 1e-8, "{z} {:?}", q);
        }
    }
}
