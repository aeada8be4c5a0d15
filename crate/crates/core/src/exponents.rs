//! The four critical exponents organizing the theory of
//! `u_t - Δ_g u = u^p`: the Sobolev exponent `p_S(N) = (N+2)/(N-2)`, the
//! Bidaut-Véron exponent `p_B(N) = N(N+2)/(N-1)²`, the Fujita exponent
//! `p_F = 1 + 2/N`, and the Li-Yau feasibility exponent
//! `p_*(N) = (N+2+√(N²+8N))/(2(N-1))` (with `p_*(1) = 8`).
//!
//! Infinite exponents (N too small for the formula) are represented as
//! `f64::INFINITY`, which orders above all finite reals.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ExponentTable {
    pub dim: u32,
    pub p_sobolev: f64,
    pub p_bidaut_veron: f64,
    pub p_fujita: f64,
    pub p_star: f64,
}

pub fn exponent_table(dim: u32) -> Result<ExponentTable> {
    if dim < 1 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    let n = dim as f64;
    let p_sobolev = if dim >= 3 { (n + 2.0) / (n - 2.0) } else { f64::INFINITY };
    let p_bidaut_veron = if dim >= 2 {
        n * (n + 2.0) / ((n - 1.0) * (n - 1.0))
    } else {
        f64::INFINITY
    };
    let p_fujita = 1.0 + 2.0 / n;
    let p_star = p_star(dim);
    Ok(ExponentTable { dim, p_sobolev, p_bidaut_veron, p_fujita, p_star })
}

pub fn p_star(dim: u32) -> f64 {
    if dim == 1 {
        8.0
    } else {
        let n = dim as f64;
        (n + 2.0 + (n * n + 8.0 * n).sqrt()) / (2.0 * (n - 1.0))
    }
}

pub fn p_sobolev(dim: u32) -> f64 {
    if dim >= 3 {
        let n = dim as f64;
        (n + 2.0) / (n - 2.0)
    } else {
        f64::INFINITY
    }
}

/// Where an exponent sits relative to the table; intervals are half-open
/// `[lower, upper)`, so a boundary value belongs to the regime above it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowFujita,
    FujitaToStar,
    StarToSobolev,
    SobolevAndAbove,
}

pub fn classify(dim: u32, p: f64) -> Result<Regime> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p must be > 1, got {p}")));
    }
    let t = exponent_table(dim)?;
    Ok(if p < t.p_fujita {
        Regime::BelowFujita
    } else if p < t.p_star {
        Regime::FujitaToStar
    } else if p < t.p_sobolev {
        Regime::StarToSobolev
    } else {
        Regime::SobolevAndAbove
    })
}

impl std::fmt::Display for ExponentTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn cell(v: f64) -> String {
            if v.is_infinite() {
                "inf".to_string()
            } else {
                format!("{v:.6}")
            }
        }
        writeln!(f, "N = {}", self.dim)?;
        writeln!(f, "  p_fujita       = {}", cell(self.p_fujita))?;
        writeln!(f, "  p_star         = {}", cell(self.p_star))?;
        writeln!(f, "  p_bidaut_veron = {}", cell(self.p_bidaut_veron))?;
        write!(f, "  p_sobolev      = {}", cell(self.p_sobolev))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let t1 = exponent_table(1).unwrap();
        assert_eq!(t1.p_star, 8.0);
        assert!(t1.p_bidaut_veron.is_infinite());
        assert!(t1.p_sobolev.is_infinite());
        assert_eq!(t1.p_fujita, 3.0);

        let t2 = exponent_table(2).unwrap();
        assert!((t2.p_star - (2.0 + 5.0f64.sqrt())).abs() < 1e-12);
        assert_eq!(t2.p_bidaut_veron, 8.0);
        assert_eq!(t2.p_fujita, 2.0);

        let t3 = exponent_table(3).unwrap();
        assert_eq!(t3.p_sobolev, 5.0);
        assert!((t3.p_star - (5.0 + 33.0f64.sqrt()) / 4.0).abs() < 1e-12);
        assert!((t3.p_bidaut_veron - 3.75).abs() < 1e-12);
    }

    #[test]
    fn dimension_zero_rejected() {
        assert!(exponent_table(0).is_err());
    }

    #[test]
    fn ordering_for_small_dimensions() {
        for dim in 2..=10 {
            let t = exponent_table(dim).unwrap();
            assert!(t.p_fujita < t.p_star, "N={dim}");
            assert!(t.p_star < t.p_sobolev, "N={dim}");
        }
    }

    #[test]
    fn p_star_strictly_decreasing() {
        for dim in 2..10 {
            assert!(p_star(dim) > p_star(dim + 1), "N={dim}");
        }
    }

    #[test]
    fn case_analysis_landmark() {
        // (N+2+√(N²+12N+4))/(2N) < 1 + 4/N for 2 ≤ N ≤ 10
        for dim in 2..=10u32 {
            let n = dim as f64;
            let lhs = (n + 2.0 + (n * n + 12.0 * n + 4.0).sqrt()) / (2.0 * n);
            assert!(lhs < 1.0 + 4.0 / n, "N={dim}: {lhs}");
        }
    }

    #[test]
    fn classification_half_open_intervals() {
        assert_eq!(classify(3, 1.5).unwrap(), Regime::BelowFujita);
        assert_eq!(classify(3, 5.0).unwrap(), Regime::SobolevAndAbove);
        assert_eq!(classify(2, 3.0).unwrap(), Regime::FujitaToStar);
        // boundary p = p_fujita belongs upward
        assert_eq!(classify(2, 2.0).unwrap(), Regime::FujitaToStar);
        assert_eq!(classify(3, 3.0).unwrap(), Regime::StarToSobolev);
        assert!(classify(3, 1.0).is_err());
    }
}
