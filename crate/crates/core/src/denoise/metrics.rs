//! MSE, PSNR, and a fixed-parameter SSIM over [0,1] RGB tensors.
//!
//! All reductions run in a fixed order so scores are reproducible bit for
//! bit. SSIM uses a 7x7 uniform window, unbiased second moments (divisor
//! N-1), C1 = (0.01 L)^2 and C2 = (0.03 L)^2 with dynamic range L = 1.

use serde::{Serialize, Serializer};

use super::ImageTensor;
use crate::error::{Error, Result};

const WINDOW: usize = 7;
const WINDOW_N: f64 = 49.0;
const C1: f64 = 1e-4;
const C2: f64 = 9e-4;

fn same_shape(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::Shape {
            expected: format!("{}x{}", a.height(), a.width()),
            actual: format!("{}x{}", b.height(), b.width()),
        });
    }
    Ok(())
}

/// Mean squared error over all entries of all three channels.
pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    same_shape(a, b)?;
    let mut acc = 0.0;
    for (av, bv) in a.data().iter().zip(b.data()) {
        let d = av - bv;
        acc += d * d;
    }
    Ok(acc / a.data().len() as f64)
}

/// PSNR in dB for a unit dynamic range; +infinity when the images agree
/// exactly.
pub fn psnr(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (1.0 / mse.sqrt()).log10()
    }
}

/// Summed-area table with a zero border row/column, so any box sum is four
/// lookups.
fn sat(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let stride = w + 1;
    let mut s = vec![0.0; (h + 1) * stride];
    for y in 0..h {
        for x in 0..w {
            s[(y + 1) * stride + x + 1] =
                f(y, x) + s[y * stride + x + 1] + s[(y + 1) * stride + x] - s[y * stride + x];
        }
    }
    s
}

fn box_sum(s: &[f64], stride: usize, y: usize, x: usize) -> f64 {
    s[(y + WINDOW) * stride + x + WINDOW] - s[y * stride + x + WINDOW]
        - s[(y + WINDOW) * stride + x]
        + s[y * stride + x]
}

/// Mean SSIM over all fully interior 7x7 windows, averaged over channels.
/// Identical inputs score exactly 1.0: every factor pair then agrees bitwise.
pub fn ssim(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    same_shape(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < WINDOW || w < WINDOW {
        return Err(Error::Domain(format!(
            "ssim needs at least {WINDOW}x{WINDOW} pixels, got {h}x{w}"
        )));
    }
    let stride = w + 1;
    let windows = ((h - WINDOW + 1) * (w - WINDOW + 1)) as f64;
    let mut total = 0.0;
    for c in 0..3 {
        let sa = sat(h, w, |y, x| a.get(y, x, c));
        let sb = sat(h, w, |y, x| b.get(y, x, c));
        let saa = sat(h, w, |y, x| a.get(y, x, c) * a.get(y, x, c));
        let sbb = sat(h, w, |y, x| b.get(y, x, c) * b.get(y, x, c));
        let sab = sat(h, w, |y, x| a.get(y, x, c) * b.get(y, x, c));
        let mut acc = 0.0;
        for y in 0..=(h - WINDOW) {
            for x in 0..=(w - WINDOW) {
                let sua = box_sum(&sa, stride, y, x);
                let sub = box_sum(&sb, stride, y, x);
                let ma = sua / WINDOW_N;
                let mb = sub / WINDOW_N;
                let va = (box_sum(&saa, stride, y, x) - sua * sua / WINDOW_N) / (WINDOW_N - 1.0);
                let vb = (box_sum(&sbb, stride, y, x) - sub * sub / WINDOW_N) / (WINDOW_N - 1.0);
                let cov = (box_sum(&sab, stride, y, x) - sua * sub / WINDOW_N) / (WINDOW_N - 1.0);
                let num = (2.0 * (ma * mb) + C1) * (2.0 * cov + C2);
                let den = (ma * ma + mb * mb + C1) * (va + vb + C2);
                acc += num / den;
            }
        }
        total += acc / windows;
    }
    Ok(total / 3.0)
}

/// The three scores for one (reference, candidate) pair.
#[derive(Debug, Clone, Serialize)]
pub struct MetricTriple {
    pub mse: f64,
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricTriple {
    pub fn between(reference: &ImageTensor, candidate: &ImageTensor) -> Result<MetricTriple> {
        let mse = mse(reference, candidate)?;
        Ok(MetricTriple {
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim(reference, candidate)?,
        })
    }
}

// JSON has no infinity literal; the sentinel string keeps reports parseable
fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_and_psnr_closed_forms() {
        let a = ImageTensor::constant(8, 8, 0.5).unwrap();
        let b = ImageTensor::constant(8, 8, 0.6).unwrap();
        let m = mse(&a, &b).unwrap();
        assert!((m - 0.01).abs() < 1e-15);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mse_rejects_shape_mismatch() {
        let a = ImageTensor::constant(8, 8, 0.5).unwrap();
        let b = ImageTensor::constant(8, 9, 0.5).unwrap();
        assert!(matches!(mse(&a, &b), Err(Error::Shape { .. })));
        assert!(matches!(ssim(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn ssim_of_identical_images_is_exactly_one() {
        let img = ImageTensor::from_fn(16, 12, |y, x, c| {
            (0.37 * y as f64 + 0.21 * x as f64 + 0.11 * c as f64).fract()
        })
        .unwrap();
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_on_constant_offset_patches_matches_hand_value() {
        // variances vanish, so the score reduces to the luminance factor
        // (2 m_a m_b + C1) / (m_a^2 + m_b^2 + C1) = 0.6001 / 0.6101
        let a = ImageTensor::constant(16, 16, 0.5).unwrap();
        let b = ImageTensor::constant(16, 16, 0.6).unwrap();
        let s = ssim(&a, &b).unwrap();
        assert!((s - 0.9836092443861661).abs() < 1e-9, "ssim {s}");
    }

    #[test]
    fn ssim_needs_a_full_window() {
        let a = ImageTensor::constant(6, 20, 0.5).unwrap();
        assert!(matches!(ssim(&a, &a), Err(Error::Domain(_))));
    }

    #[test]
    fn ssim_stays_in_range_on_rough_inputs() {
        let a = ImageTensor::from_fn(10, 10, |y, x, c| {
            if (y + x + c) % 2 == 0 { 0.0 } else { 1.0 }
        })
        .unwrap();
        let b = ImageTensor::from_fn(10, 10, |y, x, c| {
            if (y * x + c) % 3 == 0 { 1.0 } else { 0.05 }
        })
        .unwrap();
        let s = ssim(&a, &b).unwrap();
        assert!((-1.0..=1.0).contains(&s), "ssim {s}");
    }

    #[test]
    fn infinity_serializes_as_a_sentinel() {
        let t = MetricTriple { mse: 0.0, psnr_db: f64::INFINITY, ssim: 1.0 };
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"psnr_db\":\"inf\""), "{s}");
        let t = MetricTriple { mse: 0.01, psnr_db: 20.0, ssim: 0.9 };
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"psnr_db\":20.0"), "{s}");
    }
}
