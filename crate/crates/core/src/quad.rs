//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol·|I|)` or the interval budget is
//! exhausted.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Kronrod abscissae, descending, last entry the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_intervals: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    lo: T,
    hi: T,
    value: T,
    err: T,
}

fn gauss_kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T) -> Segment<T> {
    let half = T::lit(0.5);
    let centre = half * (lo + hi);
    let half_len = half * (hi - lo);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let value = kronrod * half_len;
    let err = ((kronrod - gauss) * half_len).abs();
    Segment { lo, hi, value, err }
}

/// Integrates `f` over `[lo, hi]`. An empty interval integrates to zero.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, opts: &QuadOptions) -> Result<QuadResult<T>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "quadrature bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: T::zero(),
            abs_err: T::zero(),
            intervals: 0,
        });
    }
    if hi < lo {
        let r = integrate(f, hi, lo, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }

    let abs_tol = T::lit(opts.abs_tol);
    let rel_tol = T::lit(opts.rel_tol);
    let mut segments = vec![gauss_kronrod(&mut f, lo, hi)];
    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let err: T = segments.iter().map(|s| s.err).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                abs_err: err,
                intervals: segments.len(),
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                intervals: segments.len(),
                abs_err: err.to_f64_lossy(),
                tolerance: opts.abs_tol.max(opts.rel_tol * total.to_f64_lossy().abs()),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                intervals: segments.len() + 1,
                abs_err: err.to_f64_lossy(),
                tolerance: opts.abs_tol,
            });
        }
        segments.push(gauss_kronrod(&mut f, s.lo, mid));
        segments.push(gauss_kronrod(&mut f, mid, s.hi));
    }
}
