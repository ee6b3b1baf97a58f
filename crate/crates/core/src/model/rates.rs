//! Per-site jump-rate functions `c_x(k)`.
//!
//! A site rate is a finite head table followed by a periodic-affine tail
//! `c(k) = θ·k + β[k mod p]` (β empty means a purely linear tail). Rates
//! induced by conditioning a two-colour system on the second colour are
//! represented exactly by [`SiteRate::Conditioned`].

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};
use crate::lattice::Cube;

/// Margin of increments scanned past the head for conditioned rates, whose
/// increments only converge to a periodic pattern.
const CONDITIONED_SCAN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SiteRate {
    /// `c(k) = head[k]` for `k <= K_head`, `θ·k + offsets[k mod p]` beyond.
    Tabulated {
        head: Vec<f64>,
        theta: f64,
        offsets: Vec<f64>,
    },
    /// `c̃(k) = k·c(k + shift)/(k + shift)`, the rate seen by one colour when
    /// `shift` particles of the other colour sit on the site.
    Conditioned { base: Box<SiteRate>, shift: usize },
}

impl SiteRate {
    pub fn linear(theta: f64) -> Self {
        SiteRate::Tabulated {
            head: vec![0.0],
            theta,
            offsets: Vec::new(),
        }
    }

    /// `c(k) = k + 0.5·(k mod 2)`.
    pub fn staircase() -> Self {
        SiteRate::Tabulated {
            head: vec![0.0],
            theta: 1.0,
            offsets: vec![0.0, 0.5],
        }
    }

    pub fn eval(&self, k: usize) -> f64 {
        match self {
            SiteRate::Tabulated {
                head,
                theta,
                offsets,
            } => {
                if k < head.len() {
                    head[k]
                } else {
                    let off = if offsets.is_empty() {
                        0.0
                    } else {
                        offsets[k % offsets.len()]
                    };
                    theta * k as f64 + off
                }
            }
            SiteRate::Conditioned { base, shift } => {
                if k == 0 {
                    0.0
                } else {
                    let n = k + shift;
                    k as f64 * base.eval(n) / n as f64
                }
            }
        }
    }

    /// Largest `k` up to which increments must be scanned so that every
    /// increment pattern of the tail has been seen.
    pub fn scan_limit(&self) -> usize {
        match self {
            SiteRate::Tabulated { head, offsets, .. } => head.len() + offsets.len().max(1) + 1,
            SiteRate::Conditioned { base, shift } => base.scan_limit() + shift + CONDITIONED_SCAN,
        }
    }

    /// Bounds `(inf, sup)` of `c(k)/k` over `k >= k_start >= 1`.
    fn ratio_bounds_from(&self, k_start: usize) -> (f64, f64) {
        let k_start = k_start.max(1);
        match self {
            SiteRate::Tabulated {
                head,
                theta,
                offsets,
            } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (k, v) in head.iter().enumerate().skip(k_start) {
                    let q = v / k as f64;
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
                // tail: θ + β_j / k, monotone in k on each residue class,
                // with limit θ
                let first_tail = head.len().max(k_start);
                let p = offsets.len().max(1);
                lo = lo.min(*theta);
                hi = hi.max(*theta);
                for k in first_tail..first_tail + p {
                    let q = self.eval(k) / k as f64;
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
                (lo, hi)
            }
            SiteRate::Conditioned { base, shift } => base.ratio_bounds_from(k_start + shift),
        }
    }

    pub fn ratio_bounds(&self) -> (f64, f64) {
        self.ratio_bounds_from(1)
    }

    fn validate(&self, site: usize) -> Result<()> {
        match self {
            SiteRate::Tabulated {
                head,
                theta,
                offsets,
            } => {
                if head.is_empty() {
                    return Err(ZrpError::RateSpec(format!("site {site}: empty head table")));
                }
                if head[0] != 0.0 {
                    return Err(ZrpError::NonzeroAtZero {
                        site,
                        value: head[0],
                    });
                }
                if !(*theta > 0.0) || !theta.is_finite() {
                    return Err(ZrpError::NonpositiveTail {
                        site,
                        theta: *theta,
                    });
                }
                for (k, &v) in head.iter().enumerate().skip(1) {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(ZrpError::NonpositiveRate { site, k, value: v });
                    }
                }
                // on each residue class the tail increases with k, so the
                // first tail element of each class decides positivity
                for k in head.len()..head.len() + offsets.len().max(1) {
                    let v = self.eval(k);
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(ZrpError::NonpositiveRate { site, k, value: v });
                    }
                }
                Ok(())
            }
            SiteRate::Conditioned { base, .. } => base.validate(site),
        }
    }
}

/// Validated per-site rate functions on a lattice of `num_sites` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFamily {
    rates: Vec<SiteRate>,
}

impl RateFamily {
    /// Validate and wrap per-site rates.
    pub fn new(rates: Vec<SiteRate>) -> Result<Self> {
        if rates.is_empty() {
            return Err(ZrpError::RateSpec("no sites".into()));
        }
        for (x, r) in rates.iter().enumerate() {
            r.validate(x)?;
        }
        Ok(RateFamily { rates })
    }

    /// Build from per-site `(head, θ)` pairs with purely linear tails.
    pub fn from_tables(spec: &[(Vec<f64>, f64)]) -> Result<Self> {
        Self::new(
            spec.iter()
                .map(|(head, theta)| SiteRate::Tabulated {
                    head: head.clone(),
                    theta: *theta,
                    offsets: Vec::new(),
                })
                .collect(),
        )
    }

    pub fn homogeneous(rate: SiteRate, num_sites: usize) -> Result<Self> {
        Self::new(vec![rate; num_sites])
    }

    /// Named presets: `linear`, `linear-theta:θ`, `alternating:θ1,θ2`,
    /// `staircase`. Alternating rates follow the checkerboard parity.
    pub fn preset(name: &str, cube: &Cube) -> Result<Self> {
        let n = cube.num_sites();
        let (key, arg) = match name.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (name.trim(), None),
        };
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ZrpError::RateSpec(format!("bad number '{s}' in preset '{name}'")))
        };
        match (key, arg) {
            ("linear", None) => Self::homogeneous(SiteRate::linear(1.0), n),
            ("linear-theta", Some(a)) => Self::homogeneous(SiteRate::linear(parse(a)?), n),
            ("staircase", None) => Self::homogeneous(SiteRate::staircase(), n),
            ("alternating", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                if parts.len() != 2 {
                    return Err(ZrpError::RateSpec(format!(
                        "alternating needs two coefficients, got '{a}'"
                    )));
                }
                let t = [parse(parts[0])?, parse(parts[1])?];
                Self::new(
                    (0..n)
                        .map(|x| SiteRate::linear(t[cube.parity(x)]))
                        .collect(),
                )
            }
            _ => Err(ZrpError::RateSpec(format!("unknown rate preset '{name}'"))),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.rates.len()
    }

    pub fn site_rate(&self, x: usize) -> &SiteRate {
        &self.rates[x]
    }

    pub fn rates(&self) -> &[SiteRate] {
        &self.rates
    }

    #[inline]
    pub fn rate(&self, x: usize, k: usize) -> f64 {
        self.rates[x].eval(k)
    }

    /// `log c_x(k)!` for `k = 0..=kmax`.
    pub fn log_factorials(&self, x: usize, kmax: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(kmax + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..=kmax {
            acc += self.rate(x, k).ln();
            out.push(acc);
        }
        out
    }

    /// Global envelope `(c1, c2)` with `c1·k <= c_x(k) <= c2·k`.
    pub fn envelope(&self) -> (f64, f64) {
        self.rates
            .iter()
            .map(|r| r.ratio_bounds())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| {
                (a.min(lo), b.max(hi))
            })
    }

    /// `h_x(k) = (k+1)/c_x(k+1)`.
    pub fn h_factor(&self, x: usize, k: usize) -> f64 {
        (k + 1) as f64 / self.rate(x, k + 1)
    }

    /// Same rates with every value multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        fn scale(r: &SiteRate, s: f64) -> SiteRate {
            match r {
                SiteRate::Tabulated {
                    head,
                    theta,
                    offsets,
                } => SiteRate::Tabulated {
                    head: head.iter().map(|v| v * s).collect(),
                    theta: theta * s,
                    offsets: offsets.iter().map(|v| v * s).collect(),
                },
                SiteRate::Conditioned { base, shift } => SiteRate::Conditioned {
                    base: Box::new(scale(base, s)),
                    shift: *shift,
                },
            }
        }
        Self::new(self.rates.iter().map(|r| scale(r, s)).collect())
    }

    /// Rates restricted to a subset of sites, in the given order.
    pub fn restrict(&self, sites: &[usize]) -> Result<Self> {
        Self::new(sites.iter().map(|&x| self.rates[x].clone()).collect())
    }

    /// Parse the plain-text rate file format; see `docs/rate-file.md`.
    pub fn parse_spec(text: &str) -> Result<Self> {
        parse::parse(text)
    }
}

mod parse {
    use super::*;

    #[derive(Default, Clone)]
    struct Block {
        head: Option<Vec<f64>>,
        theta: Option<f64>,
        offsets: Option<Vec<f64>>,
    }

    fn list(v: &str, line: usize) -> Result<Vec<f64>> {
        let v = v.trim();
        let inner = v
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| ZrpError::RateSpec(format!("line {line}: expected [v0, v1, ...]")))?;
        if inner.trim().is_empty() {
            return Ok(Vec::new());
        }
        inner
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| ZrpError::RateSpec(format!("line {line}: bad number '{}'", s.trim())))
            })
            .collect()
    }

    pub(super) fn parse(text: &str) -> Result<RateFamily> {
        let mut sites: Option<usize> = None;
        let mut all = Block::default();
        let mut per_site: Vec<(usize, Block)> = Vec::new();
        // None = top level, Some(None) = [all], Some(Some(i)) = [site i]
        let mut current: Option<Option<usize>> = None;

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(sec) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let sec = sec.trim();
                if sec == "all" {
                    current = Some(None);
                } else if let Some(idx) = sec.strip_prefix("site") {
                    let idx: usize = idx.trim().parse().map_err(|_| {
                        ZrpError::RateSpec(format!("line {lineno}: bad section '[{sec}]'"))
                    })?;
                    if per_site.iter().any(|(j, _)| *j == idx) {
                        return Err(ZrpError::RateSpec(format!(
                            "line {lineno}: duplicate section [site {idx}]"
                        )));
                    }
                    per_site.push((idx, Block::default()));
                    current = Some(Some(idx));
                } else {
                    return Err(ZrpError::RateSpec(format!(
                        "line {lineno}: unknown section '[{sec}]'"
                    )));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ZrpError::RateSpec(format!("line {lineno}: expected key = value")))?;
            let key = key.trim();
            let block = match current {
                None => {
                    if key == "sites" {
                        sites = Some(value.trim().parse().map_err(|_| {
                            ZrpError::RateSpec(format!("line {lineno}: bad site count"))
                        })?);
                        continue;
                    }
                    return Err(ZrpError::RateSpec(format!(
                        "line {lineno}: key '{key}' outside a section"
                    )));
                }
                Some(None) => &mut all,
                Some(Some(_)) => &mut per_site.last_mut().expect("section pushed").1,
            };
            match key {
                "head" => block.head = Some(list(value, lineno)?),
                "tail_theta" => {
                    block.theta = Some(value.trim().parse().map_err(|_| {
                        ZrpError::RateSpec(format!("line {lineno}: bad tail_theta"))
                    })?)
                }
                "tail_offsets" => block.offsets = Some(list(value, lineno)?),
                _ => {
                    return Err(ZrpError::RateSpec(format!(
                        "line {lineno}: unknown key '{key}'"
                    )))
                }
            }
        }

        let n = match sites {
            Some(n) => n,
            None => per_site.iter().map(|(i, _)| i + 1).max().unwrap_or(0),
        };
        if n == 0 {
            return Err(ZrpError::RateSpec("no sites declared".into()));
        }
        let mut rates = Vec::with_capacity(n);
        for x in 0..n {
            let own = per_site.iter().find(|(i, _)| *i == x).map(|(_, b)| b.clone());
            let own = own.unwrap_or_default();
            let head = own.head.or_else(|| all.head.clone()).ok_or_else(|| {
                ZrpError::RateSpec(format!("site {x}: missing head"))
            })?;
            let theta = own.theta.or(all.theta).ok_or_else(|| {
                ZrpError::RateSpec(format!("site {x}: missing tail_theta"))
            })?;
            let offsets = own.offsets.or_else(|| all.offsets.clone()).unwrap_or_default();
            rates.push(SiteRate::Tabulated {
                head,
                theta,
                offsets,
            });
        }
        if let Some((bad, _)) = per_site.iter().find(|(i, _)| *i >= n) {
            return Err(ZrpError::RateSpec(format!(
                "section [site {bad}] beyond declared {n} sites"
            )));
        }
        RateFamily::new(rates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_linear() {
        let rf = RateFamily::preset("linear", &Cube::segment(3)).unwrap();
        for x in 0..3 {
            assert_eq!(rf.rate(x, 5), 5.0);
            assert_eq!(rf.rate(x, 0), 0.0);
        }
    }

    #[test]
    fn alternating_segment() {
        let rf = RateFamily::preset("alternating:1,2", &Cube::segment(2)).unwrap();
        assert_eq!(rf.rate(0, 3), 3.0);
        assert_eq!(rf.rate(1, 3), 6.0);
    }

    #[test]
    fn nonzero_at_zero_rejected() {
        let err = RateFamily::from_tables(&[(vec![1.0, 1.0], 1.0)]).unwrap_err();
        assert!(matches!(err, ZrpError::NonzeroAtZero { site: 0, .. }));
    }

    #[test]
    fn nonpositive_rate_and_tail_rejected() {
        let err = RateFamily::from_tables(&[(vec![0.0, 0.0], 1.0)]).unwrap_err();
        assert!(matches!(err, ZrpError::NonpositiveRate { k: 1, .. }));
        let err = RateFamily::from_tables(&[(vec![0.0, 1.0], 0.0)]).unwrap_err();
        assert!(matches!(err, ZrpError::NonpositiveTail { .. }));
        let neg_tail = SiteRate::Tabulated {
            head: vec![0.0],
            theta: 1.0,
            offsets: vec![0.0, -1.5],
        };
        assert!(RateFamily::new(vec![neg_tail]).is_err());
    }

    #[test]
    fn staircase_values() {
        let s = SiteRate::staircase();
        let v: Vec<f64> = (0..6).map(|k| s.eval(k)).collect();
        assert_eq!(v, vec![0.0, 1.5, 2.0, 3.5, 4.0, 5.5]);
        let (lo, hi) = s.ratio_bounds();
        assert_eq!(lo, 1.0);
        assert_eq!(hi, 1.5);
    }

    #[test]
    fn h_factor_values() {
        let rf = RateFamily::preset("linear", &Cube::segment(2)).unwrap();
        assert_eq!(rf.h_factor(0, 7), 1.0);
        let rf = RateFamily::preset("linear-theta:2", &Cube::segment(2)).unwrap();
        assert_eq!(rf.h_factor(1, 3), 0.5);
    }

    #[test]
    fn h_factor_within_envelope() {
        let rf = RateFamily::preset("staircase", &Cube::segment(2)).unwrap();
        let (c1, c2) = rf.envelope();
        for k in 0..50 {
            let h = rf.h_factor(0, k);
            assert!(h >= 1.0 / c2 - 1e-15 && h <= 1.0 / c1 + 1e-15);
        }
    }

    #[test]
    fn conditioned_rate_matches_formula() {
        let r = SiteRate::Conditioned {
            base: Box::new(SiteRate::staircase()),
            shift: 1,
        };
        assert!((r.eval(2) - 2.0 * 3.5 / 3.0).abs() < 1e-15);
        assert_eq!(r.eval(0), 0.0);
    }

    #[test]
    fn parse_file_format() {
        let text = "\
# three sites, the middle one faster
sites = 3
[all]
head = [0, 1.5]
tail_theta = 1
tail_offsets = [0, 0.5]
[site 1]
head = [0]
tail_theta = 2
";
        let rf = RateFamily::parse_spec(text).unwrap();
        assert_eq!(rf.num_sites(), 3);
        assert_eq!(rf.rate(0, 3), 3.5);
        assert_eq!(rf.rate(1, 3), 6.0 + 0.5);
        assert_eq!(rf.rate(2, 2), 2.0);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(RateFamily::parse_spec("[site 0]\nhead = 0, 1\ntail_theta = 1").is_err());
        assert!(RateFamily::parse_spec("[site 0]\nhead = [0]\n").is_err());
        assert!(RateFamily::parse_spec("[site 0]\nhead = [1]\ntail_theta = 1").is_err());
        assert!(RateFamily::parse_spec("foo = 1").is_err());
    }
}
