//! Reference results for the four benchmark tables.

use serde::Serialize;

use crate::bench::{Benchmark, Region};

/// One reference `(class, deg phi) -> (eps, L)` result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub table: u8,
    pub row: u8,
    pub benchmark: Benchmark,
    pub region: Region,
    pub a: u32,
    pub b: u32,
    pub deg_phi: u32,
    pub epsilon: f64,
    /// As printed.
    pub lagrangian: &'static str,
    /// Parseable form of `lagrangian`, absent when it names unreported coefficients.
    pub reference: Option<&'static str>,
    /// Interval a reproduced `eps` is expected to fall in.
    pub band: (f64, f64),
}

/// Band used for reference zeros.
pub const ZERO_BAND: (f64, f64) = (-1e-6, 1e-6);

/// Default band: one order of magnitude either way.
fn decade(eps: f64) -> (f64, f64) {
    if eps == 0.0 {
        ZERO_BAND
    } else {
        (eps / 10.0, eps * 10.0)
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    table: u8,
    row: u8,
    benchmark: Benchmark,
    region: Region,
    (a, b): (u32, u32),
    deg_phi: u32,
    epsilon: f64,
    lagrangian: &'static str,
    reference: Option<&'static str>,
    band: Option<(f64, f64)>,
) -> ReferenceRow {
    ReferenceRow {
        table,
        row,
        benchmark,
        region,
        a,
        b,
        deg_phi,
        epsilon,
        lagrangian,
        reference,
        band: band.unwrap_or_else(|| decade(epsilon)),
    }
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    use Benchmark::*;
    let ball = Region::Ball;
    let annulus = Region::Annulus(0.5);
    vec![
        row(1, 1, Lq, ball, (1, 1), 4, 7e-2, "0.78x1^2+0.82x1x2+2.11x2^2+1.12u^2", Some("0.78*x1^2 + 0.82*x1*x2 + 2.11*x2^2 + 1.12*u^2"), None),
        row(1, 2, Lq, ball, (1, 0), 10, 3.1e-1, "2.67x1^2-2.31x1x2+1.33x2^2", Some("2.67*x1^2 - 2.31*x1*x2 + 1.33*x2^2"), Some((0.1, 0.6))),
        row(1, 3, Lq, ball, (1, 1), 10, 4.5e-6, "2x1^2+0.5x1x2+x2^2+u^2", Some("2*x1^2 + 0.5*x1*x2 + x2^2 + u^2"), Some((-1e-6, 1e-4))),
        row(1, 4, Lq, ball, (2, 2), 10, 4.5e-6, "2x1^2+0.5x1x2+x2^2+u^2", Some("2*x1^2 + 0.5*x1*x2 + x2^2 + u^2"), Some((-1e-6, 1e-4))),
        row(2, 1, ExitNorm, ball, (1, 1), 2, 0.0, "x1^2+x2^2+u1^2+u2^2", Some("x1^2 + x2^2 + u1^2 + u2^2"), None),
        row(2, 2, ExitNorm, ball, (2, 2), 2, 0.0, "x1^2+x2^2+u1^2+u2^2", Some("x1^2 + x2^2 + u1^2 + u2^2"), None),
        row(2, 3, ExitNorm, ball, (1, 1), 4, 0.0, "x1^2+x2^2+u1^2+u2^2", Some("x1^2 + x2^2 + u1^2 + u2^2"), None),
        row(2, 4, ExitNorm, ball, (2, 2), 4, 0.0, "x1^2+x2^2+u1^2+u2^2", Some("x1^2 + x2^2 + u1^2 + u2^2"), None),
        row(2, 5, ExitNorm, ball, (0, 1), 2, 2e-3, "1.97+0.54(u1^2+u2^2)", Some("1.97 + 0.54*(u1^2 + u2^2)"), Some((5e-4, 1e-2))),
        row(3, 1, ExitTime, ball, (0, 1), 4, 1e-1, "0.31+0.34u1^2+0.36u2^2", Some("0.31 + 0.34*u1^2 + 0.36*u2^2"), Some((3e-2, 3e-1))),
        row(3, 2, ExitTime, ball, (0, 1), 12, 2e-2, "0.327+0.335u1^2+0.337u2^2", Some("0.327 + 0.335*u1^2 + 0.337*u2^2"), None),
        row(3, 3, ExitTime, annulus, (0, 1), 12, 2e-4, "0.338+0.326u1^2+0.336u2^2", Some("0.338 + 0.326*u1^2 + 0.336*u2^2"), None),
        row(3, 4, ExitTime, ball, (1, 1), 2, 4.5e-2, "0.337u1^2+0.339u2^2+0.741x1^2+0.738x2^2", Some("0.337*u1^2 + 0.339*u2^2 + 0.741*x1^2 + 0.738*x2^2"), None),
        row(3, 5, ExitTime, ball, (1, 1), 12, 3e-4, "x1^2+x2^2", Some("x1^2 + x2^2"), None),
        row(3, 6, ExitTime, ball, (0, 2), 4, 0.0, "(1-u1^2-u2^2)^2", Some("(1 - u1^2 - u2^2)^2"), None),
        row(3, 7, ExitTime, ball, (2, 2), 4, 0.0, "(1-u1^2-u2^2)^2", Some("(1 - u1^2 - u2^2)^2"), None),
        row(4, 1, Brockett, ball, (0, 1), 10, 8.31e-2, "0.313+0.339u1^2+0.348u2^2", Some("0.313 + 0.339*u1^2 + 0.348*u2^2"), None),
        row(4, 2, Brockett, ball, (0, 1), 14, 4.36e-2, "0.323+0.338u1^2+0.339u2^2", Some("0.323 + 0.338*u1^2 + 0.339*u2^2"), None),
        row(4, 3, Brockett, ball, (0, 2), 10, 0.0, "(1-u1^2-u2^2)^2", Some("(1 - u1^2 - u2^2)^2"), Some((-1e-6, 1e-5))),
        row(4, 4, Brockett, ball, (2, 2), 10, 0.0, "(1-u1^2-u2^2)^2", Some("(1 - u1^2 - u2^2)^2"), Some((-1e-6, 1e-5))),
        row(4, 5, Brockett, ball, (1, 1), 12, 1e-1, "m1(x)'C1x m1(x)+0.31u1^2+0.35+0.33u2^2", None, None),
    ]
}
