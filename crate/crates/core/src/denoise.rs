//! Image denoising built on the absorption branch of the evolution kernel.
//!
//! A noisy RGB image is treated as three independent periodic fields in
//! [0,1]. The slow-diffusion method marches dv/dt = lap(v^alpha) - mu(t) v
//! with a decaying rate mu; the reference method is Perona-Malik
//! anisotropic diffusion with an exponential edge-stopping function. Both
//! outputs pass through the same contrast postprocessing before scoring.

pub mod metrics;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bernoulli::GrowthRate;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid2D};
use crate::parabolic::{step_explicit, SourceSign};
use metrics::MetricTriple;

const CHANNELS: usize = 3;
const MAX_PIXELS: usize = 1 << 26;

/// RGB image with entries in [0,1], row-major, channel-last:
/// `data[(y * width + x) * 3 + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Domain(format!("image must be nonempty, got {height}x{width}")));
        }
        if height.saturating_mul(width) > MAX_PIXELS {
            return Err(Error::Domain(format!(
                "image {height}x{width} exceeds the {MAX_PIXELS}-pixel cap"
            )));
        }
        let want = height * width * CHANNELS;
        if data.len() != want {
            return Err(Error::Shape {
                expected: format!("{want} values for {height}x{width}x{CHANNELS}"),
                actual: format!("{}", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::Domain("image entries must lie in [0,1]".into()));
        }
        Ok(ImageTensor { height, width, data })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    /// Builds from `f(y, x, c)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        debug_assert!(y < self.height && x < self.width && c < CHANNELS);
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    /// Extracts one channel as a periodic unit-spacing grid.
    pub fn channel(&self, c: usize) -> Grid2D {
        assert!(c < CHANNELS, "channel index {c} out of range");
        Grid2D::from_fn(self.width, self.height, 1.0, Boundary::Periodic, |i, j| {
            self.get(j, i, c)
        })
        .expect("image entries are validated finite")
    }

    pub fn from_channels(channels: &[Grid2D; CHANNELS]) -> Result<Self> {
        let (w, h) = (channels[0].nx(), channels[0].ny());
        for g in channels.iter().skip(1) {
            if g.nx() != w || g.ny() != h {
                return Err(Error::Shape {
                    expected: format!("{w}x{h} channels"),
                    actual: format!("{}x{}", g.nx(), g.ny()),
                });
            }
        }
        Self::from_fn(h, w, |y, x, c| channels[c].get(x, y))
    }

    /// Reads an 8-bit PNG, replicating grayscale to three channels.
    /// Samples are normalized by 1/255.
    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        let (w, h) = (w as usize, h as usize);
        let mut data = Vec::with_capacity(h * w * CHANNELS);
        for y in 0..h {
            for x in 0..w {
                let px = img.get_pixel(x as u32, y as u32).0;
                for c in 0..CHANNELS {
                    data.push(px[c] as f64 / 255.0);
                }
            }
        }
        Self::new(h, w, data)
    }

    /// Writes an 8-bit PNG; samples are scaled by 255 and rounded half to
    /// even.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let mut img = image::RgbImage::new(self.width as u32, self.height as u32);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut px = [0u8; CHANNELS];
                for (c, b) in px.iter_mut().enumerate() {
                    let v = (self.get(y, x, c) * 255.0).round_ties_even();
                    *b = v.clamp(0.0, 255.0) as u8;
                }
                img.put_pixel(x as u32, y as u32, image::Rgb(px));
            }
        }
        img.save(path)?;
        Ok(())
    }

    /// Adds seeded Gaussian noise and clips back to [0,1]. One noise value
    /// is drawn per pixel (row-major) and applied to all three channels, so
    /// a channel permutation commutes with this operation bitwise.
    pub fn add_gaussian_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Domain(format!("noise level must be >= 0, got {sigma}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = self.data.clone();
        for px in 0..self.height * self.width {
            let z: f64 = rng.sample(StandardNormal);
            let d = sigma * z;
            for c in 0..CHANNELS {
                let v = &mut data[px * CHANNELS + c];
                *v = (*v + d).clamp(0.0, 1.0);
            }
        }
        Self::new(self.height, self.width, data)
    }
}

/// Knobs for the full pipeline. Defaults are the reference configuration;
/// `dt_gm` sits below the stability bound 1/(4 alpha_gm) for unit-range data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseParams {
    pub alpha_gm: f64,
    pub dt_gm: f64,
    pub steps_gm: usize,
    pub dt_pm: f64,
    pub steps_pm: usize,
    pub k_pm: f64,
    pub gamma_correction: f64,
    pub stretch_strength: f64,
    pub brightness_boost: f64,
    pub sigma_noise: f64,
    pub mu: GrowthRate,
    pub seed: u64,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        DenoiseParams {
            alpha_gm: 4.0,
            dt_gm: 0.0118,
            steps_gm: 400,
            dt_pm: 0.2,
            steps_pm: 40,
            k_pm: 0.1,
            gamma_correction: 1.05,
            stretch_strength: 0.9,
            brightness_boost: 1.0,
            sigma_noise: 0.1,
            mu: GrowthRate::RationalDecay(0.3),
            seed: 0,
        }
    }
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_gm.is_finite() && self.alpha_gm >= 1.0) {
            return Err(Error::Domain(format!("alpha_gm must be >= 1, got {}", self.alpha_gm)));
        }
        if !(self.dt_gm > 0.0 && self.dt_gm * 4.0 * self.alpha_gm <= 1.0) {
            return Err(Error::Domain(format!(
                "dt_gm must lie in (0, 1/(4 alpha_gm)], got {}",
                self.dt_gm
            )));
        }
        if !(self.dt_pm.is_finite() && self.dt_pm > 0.0) {
            return Err(Error::Domain(format!("dt_pm must be positive, got {}", self.dt_pm)));
        }
        if self.steps_gm == 0 || self.steps_pm == 0 {
            return Err(Error::Domain("step counts must be at least 1".into()));
        }
        if !(self.k_pm.is_finite() && self.k_pm > 0.0) {
            return Err(Error::Domain(format!("k_pm must be positive, got {}", self.k_pm)));
        }
        if !(self.gamma_correction.is_finite() && self.gamma_correction > 0.0) {
            return Err(Error::Domain(format!(
                "gamma_correction must be positive, got {}",
                self.gamma_correction
            )));
        }
        if !(0.0..=1.0).contains(&self.stretch_strength) {
            return Err(Error::Domain(format!(
                "stretch_strength must lie in [0,1], got {}",
                self.stretch_strength
            )));
        }
        if !(self.brightness_boost.is_finite() && self.brightness_boost > 0.0) {
            return Err(Error::Domain(format!(
                "brightness_boost must be positive, got {}",
                self.brightness_boost
            )));
        }
        if !(self.sigma_noise.is_finite() && self.sigma_noise >= 0.0) {
            return Err(Error::Domain(format!(
                "sigma_noise must be >= 0, got {}",
                self.sigma_noise
            )));
        }
        self.mu.validate()
    }
}

fn require_unit_periodic(channel: &Grid2D) -> Result<()> {
    if channel.bc() != Boundary::Periodic {
        return Err(Error::Domain("image channels must use periodic boundaries".into()));
    }
    if !channel.data().iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::Domain("channel values must lie in [0,1]".into()));
    }
    Ok(())
}

/// Slow-diffusion denoising of one channel: `steps_gm` explicit steps of
/// dv/dt = lap(v^alpha_gm) - mu(t) v, each clipped back to [0,1]. The rate
/// is evaluated at the step-start time n dt.
pub fn diffuse_gm(channel: &Grid2D, p: &DenoiseParams) -> Result<Grid2D> {
    p.validate()?;
    require_unit_periodic(channel)?;
    let mut v = channel.clone();
    for n in 0..p.steps_gm {
        let t = n as f64 * p.dt_gm;
        v = step_explicit(&v, t, p.dt_gm, p.alpha_gm, &p.mu, SourceSign::Absorption)?;
        v.clip01_in_place();
    }
    Ok(v)
}

/// Perona-Malik anisotropic diffusion of one channel: one-sided differences
/// on both axes with wraparound, conductivity g(s) = exp(-s^2/k^2) per
/// difference, explicit update clipped to [0,1].
pub fn diffuse_pm(channel: &Grid2D, p: &DenoiseParams) -> Result<Grid2D> {
    p.validate()?;
    require_unit_periodic(channel)?;
    let nx = channel.nx();
    let ny = channel.ny();
    let inv_k2 = 1.0 / (p.k_pm * p.k_pm);
    let g = |s: f64| (-s * s * inv_k2).exp();
    let mut v = channel.clone();
    let mut next = channel.like();
    for _ in 0..p.steps_pm {
        {
            let d = v.data();
            let out = next.data_mut();
            for j in 0..ny {
                let jm = if j == 0 { ny - 1 } else { j - 1 };
                let jp = if j + 1 == ny { 0 } else { j + 1 };
                for i in 0..nx {
                    let im = if i == 0 { nx - 1 } else { i - 1 };
                    let ip = if i + 1 == nx { 0 } else { i + 1 };
                    let c = d[j * nx + i];
                    let xf = d[j * nx + ip] - c;
                    let xb = c - d[j * nx + im];
                    let yf = d[jp * nx + i] - c;
                    let yb = c - d[jm * nx + i];
                    let div = g(xf) * xf - g(xb) * xb + g(yf) * yf - g(yb) * yb;
                    out[j * nx + i] = (c + p.dt_pm * div).clamp(0.0, 1.0);
                }
            }
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v)
}

/// Contrast restoration applied to both methods' outputs: linear stretch to
/// [0,1] using one min/max over all three channels (skipped when the image
/// is constant), blend with the unstretched input, gamma, brightness, clip.
pub fn postprocess(img: &ImageTensor, p: &DenoiseParams) -> Result<ImageTensor> {
    p.validate()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in img.data() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let s = p.stretch_strength;
    let data = img
        .data()
        .iter()
        .map(|v| {
            let stretched = if hi > lo { (v - lo) / (hi - lo) } else { *v };
            let blended = s * stretched + (1.0 - s) * v;
            (blended.powf(p.gamma_correction) * p.brightness_boost).clamp(0.0, 1.0)
        })
        .collect();
    ImageTensor::new(img.height(), img.width(), data)
}

/// Which diffusion drives a denoising run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Slow nonlinear diffusion with an absorption rate.
    Gm,
    /// Perona-Malik anisotropic diffusion.
    Pm,
}

/// Denoises a full image with one method: per-channel diffusion followed by
/// the shared postprocessing. With `threads >= 2` the three channels run on
/// scoped worker threads; the result is bitwise independent of `threads`.
pub fn denoise_image(
    img: &ImageTensor,
    p: &DenoiseParams,
    method: Method,
    threads: usize,
) -> Result<ImageTensor> {
    let chans = [img.channel(0), img.channel(1), img.channel(2)];
    let run = |g: &Grid2D| match method {
        Method::Gm => diffuse_gm(g, p),
        Method::Pm => diffuse_pm(g, p),
    };
    let done: Vec<Grid2D> = if threads >= 2 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chans.iter().map(|g| scope.spawn(move || run(g))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("channel worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        chans.iter().map(run).collect::<Result<Vec<_>>>()?
    };
    let done: [Grid2D; CHANNELS] = done.try_into().expect("one grid per channel");
    let merged = ImageTensor::from_channels(&done)?;
    postprocess(&merged, p)
}

/// Scores for whichever stages a pipeline run produced, always against the
/// clean reference.
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseMetrics {
    pub noisy: MetricTriple,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm: Option<MetricTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pm: Option<MetricTriple>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenoiseReport {
    pub params: DenoiseParams,
    pub seed: u64,
    pub metrics: DenoiseMetrics,
}

impl DenoiseReport {
    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

pub struct PipelineOutput {
    pub noisy: ImageTensor,
    pub gm: Option<ImageTensor>,
    pub pm: Option<ImageTensor>,
    pub report: DenoiseReport,
}

/// Full pipeline: noise injection, the selected diffusions, postprocessing,
/// metrics against the clean input. Deterministic for a fixed
/// (image, params) pair regardless of `threads`.
pub fn run_pipeline(
    clean: &ImageTensor,
    p: &DenoiseParams,
    run_gm: bool,
    run_pm: bool,
    threads: usize,
) -> Result<PipelineOutput> {
    p.validate()?;
    let noisy = clean.add_gaussian_noise(p.sigma_noise, p.seed)?;
    let gm = if run_gm { Some(denoise_image(&noisy, p, Method::Gm, threads)?) } else { None };
    let pm = if run_pm { Some(denoise_image(&noisy, p, Method::Pm, threads)?) } else { None };
    let metrics = DenoiseMetrics {
        noisy: MetricTriple::between(clean, &noisy)?,
        gm: gm.as_ref().map(|img| MetricTriple::between(clean, img)).transpose()?,
        pm: pm.as_ref().map(|img| MetricTriple::between(clean, img)).transpose()?,
    };
    let report = DenoiseReport { params: p.clone(), seed: p.seed, metrics };
    Ok(PipelineOutput { noisy, gm, pm, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn small_params() -> DenoiseParams {
        DenoiseParams { steps_gm: 20, steps_pm: 5, ..DenoiseParams::default() }
    }

    #[test]
    fn tensor_validation() {
        assert!(matches!(ImageTensor::new(0, 4, vec![]), Err(Error::Domain(_))));
        assert!(matches!(ImageTensor::new(2, 2, vec![0.5; 11]), Err(Error::Shape { .. })));
        assert!(matches!(ImageTensor::new(2, 2, vec![1.5; 12]), Err(Error::Domain(_))));
        assert!(matches!(ImageTensor::new(2, 2, vec![f64::NAN; 12]), Err(Error::Domain(_))));
        assert!(ImageTensor::constant(2, 3, 0.25).is_ok());
    }

    #[test]
    fn channels_round_trip() {
        let img = ImageTensor::from_fn(5, 4, |y, x, c| {
            (y as f64 * 0.11 + x as f64 * 0.07 + c as f64 * 0.23).fract()
        })
        .unwrap();
        let chans = [img.channel(0), img.channel(1), img.channel(2)];
        assert_eq!(chans[1].bc(), Boundary::Periodic);
        assert_eq!(chans[1].get(2, 3), img.get(3, 2, 1));
        let back = ImageTensor::from_channels(&chans).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn png_round_trip_is_exact_on_quantized_values() {
        let img = ImageTensor::from_fn(9, 7, |y, x, c| {
            ((y * 31 + x * 17 + c * 5) % 256) as f64 / 255.0
        })
        .unwrap();
        let path = std::env::temp_dir().join(format!("denoise-roundtrip-{}.png", std::process::id()));
        img.write_png(&path).unwrap();
        let back = ImageTensor::read_png(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back, img);
    }

    #[test]
    fn noise_is_deterministic_and_respects_sigma_zero() {
        let img = ImageTensor::constant(8, 8, 0.5).unwrap();
        let a = img.add_gaussian_noise(0.1, 42).unwrap();
        let b = img.add_gaussian_noise(0.1, 42).unwrap();
        assert_eq!(a, b);
        let c = img.add_gaussian_noise(0.1, 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(img.add_gaussian_noise(0.0, 42).unwrap(), img);
        assert!(matches!(img.add_gaussian_noise(-0.1, 0), Err(Error::Domain(_))));
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn noise_commutes_with_channel_permutation() {
        let img = ImageTensor::from_fn(6, 6, |y, x, c| {
            (0.1 + 0.05 * (y as f64) + 0.02 * (x as f64) + 0.3 * (c as f64)).min(1.0)
        })
        .unwrap();
        let rotate = |t: &ImageTensor, shift: usize| {
            ImageTensor::from_fn(t.height(), t.width(), |y, x, c| t.get(y, x, (c + shift) % 3))
                .unwrap()
        };
        let direct = img.add_gaussian_noise(0.15, 9).unwrap();
        let via_permutation = rotate(&rotate(&img, 1).add_gaussian_noise(0.15, 9).unwrap(), 2);
        assert_eq!(direct, via_permutation);
    }

    #[test]
    fn clipping_shrinks_the_noise_spread() {
        let img = ImageTensor::constant(128, 128, 0.25).unwrap();
        let noisy = img.add_gaussian_noise(0.18, 0).unwrap();
        // one draw per pixel; measure over one channel
        let n = (img.height() * img.width()) as f64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                let d = noisy.get(y, x, 0) - img.get(y, x, 0);
                sum += d;
                sum2 += d * d;
            }
        }
        let var = (sum2 - sum * sum / n) / (n - 1.0);
        let std = var.sqrt();
        assert!(
            std > 0.16 && std < 0.18,
            "clipped noise spread {std} outside (0.16, 0.18)"
        );
    }

    #[test]
    fn gm_constant_field_follows_the_scalar_recursion() {
        // dyadic level keeps the stencil cancellation exact, so the march
        // is bitwise a scalar recursion
        let p = small_params();
        let g = Grid2D::constant(8, 8, 1.0, Boundary::Periodic, 0.375).unwrap();
        let out = diffuse_gm(&g, &p).unwrap();
        let mut e = 0.375f64;
        for n in 0..p.steps_gm {
            let t = n as f64 * p.dt_gm;
            let rate = -p.mu.eval(t);
            e = (e + p.dt_gm * (0.0 + rate * e)).max(0.0).clamp(0.0, 1.0);
        }
        assert!(out.data().iter().all(|v| *v == e), "expected {e}, got {}", out.get(0, 0));

        let z = Grid2D::zeros(8, 8, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(diffuse_gm(&z, &p).unwrap(), z);
    }

    #[test]
    fn gm_reduces_variance_of_noise() {
        let clean = ImageTensor::constant(64, 64, 0.5).unwrap();
        let noisy = clean.add_gaussian_noise(0.18, 0).unwrap();
        let p = DenoiseParams::default();
        let chan = noisy.channel(0);
        let out = diffuse_gm(&chan, &p).unwrap();
        let var = |g: &Grid2D| {
            let m = g.data().iter().sum::<f64>() / g.data().len() as f64;
            g.data().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / g.data().len() as f64
        };
        assert!(
            var(&out) < var(&chan),
            "variance grew: {} -> {}",
            var(&chan),
            var(&out)
        );
    }

    #[test]
    fn pm_fixes_constant_fields() {
        let p = small_params();
        let g = Grid2D::constant(9, 5, 1.0, Boundary::Periodic, 0.61).unwrap();
        assert_eq!(diffuse_pm(&g, &p).unwrap(), g);
    }

    #[test]
    fn pm_preserves_a_unit_step_edge() {
        let p = DenoiseParams::default();
        let g = Grid2D::from_fn(64, 64, 1.0, Boundary::Periodic, |i, _| {
            if i < 32 { 0.0 } else { 1.0 }
        })
        .unwrap();
        let out = diffuse_pm(&g, &p).unwrap();
        let worst = out.max_abs_diff(&g).unwrap();
        assert!(worst < 1e-3, "edge smeared by {worst:e}");
    }

    #[test]
    fn pm_matches_linear_diffusion_on_small_gradients() {
        let p = small_params();
        let v0 = Grid2D::from_fn(64, 64, 1.0, Boundary::Periodic, |i, _| {
            0.5 + 0.001 * (TAU * i as f64 / 64.0).sin()
        })
        .unwrap();
        let pm = diffuse_pm(&v0, &p).unwrap();
        let mut heat = v0.clone();
        for _ in 0..p.steps_pm {
            let lap = heat.laplacian();
            let mut next = heat.like();
            for ((nv, hv), lv) in next.data_mut().iter_mut().zip(heat.data()).zip(lap.data()) {
                *nv = hv + p.dt_pm * lv;
            }
            heat = next;
        }
        let drift = heat.max_abs_diff(&v0).unwrap();
        let gap = pm.max_abs_diff(&heat).unwrap();
        assert!(gap <= 0.01 * drift, "gap {gap:e} vs diffusion drift {drift:e}");
    }

    #[test]
    fn postprocess_examples() {
        // constant image: stretch skipped, only gamma applies
        let p = DenoiseParams::default();
        let flat = ImageTensor::constant(4, 4, 0.5).unwrap();
        let out = postprocess(&flat, &p).unwrap();
        assert!((out.get(0, 0, 0) - 0.5f64.powf(1.05)).abs() < 1e-15);

        // span [0.2, 0.7] with gamma disabled: blend endpoints are exact
        let p1 = DenoiseParams { gamma_correction: 1.0, ..DenoiseParams::default() };
        let img = ImageTensor::from_fn(4, 4, |y, x, _| 0.2 + 0.5 * ((y * 4 + x) as f64 / 15.0))
            .unwrap();
        let out = postprocess(&img, &p1).unwrap();
        let lo = out.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = out.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 0.02).abs() < 1e-12, "min {lo}");
        assert!((hi - 0.97).abs() < 1e-12, "max {hi}");

        // gamma is nonlinear, so a second pass changes the image
        let once = postprocess(&img, &p).unwrap();
        let twice = postprocess(&once, &p).unwrap();
        assert_ne!(once, twice);
    }

    #[test]
    fn pipeline_is_thread_invariant() {
        let clean = ImageTensor::from_fn(24, 24, |y, x, c| {
            0.5 + 0.4 * (TAU * (y + 2 * c) as f64 / 24.0).sin() * (TAU * x as f64 / 24.0).cos()
        })
        .unwrap();
        let p = DenoiseParams { sigma_noise: 0.1, seed: 7, ..small_params() };
        let seq = run_pipeline(&clean, &p, true, true, 1).unwrap();
        let par = run_pipeline(&clean, &p, true, true, 4).unwrap();
        assert_eq!(seq.noisy, par.noisy);
        assert_eq!(seq.gm, par.gm);
        assert_eq!(seq.pm, par.pm);
        assert_eq!(seq.report.to_json().unwrap(), par.report.to_json().unwrap());
        assert!(seq.report.metrics.gm.is_some() && seq.report.metrics.pm.is_some());
    }

    #[test]
    fn pipeline_with_zero_noise_scores_near_perfect() {
        let clean = ImageTensor::from_fn(64, 64, |y, x, _| {
            0.5 - 0.5 * (TAU * x as f64 / 64.0).cos() * (0.2 + 0.8 * (TAU * y as f64 / 64.0).sin().powi(2))
        })
        .unwrap();
        let p = DenoiseParams { sigma_noise: 0.0, ..DenoiseParams::default() };
        let out = run_pipeline(&clean, &p, true, false, 1).unwrap();
        assert_eq!(out.report.metrics.noisy.mse, 0.0);
        assert!(out.report.metrics.noisy.psnr_db.is_infinite());
        assert_eq!(out.report.metrics.noisy.ssim, 1.0);
        let json = out.report.to_json().unwrap();
        assert!(json.contains("\"psnr_db\": \"inf\""), "{json}");
        let gm = out.report.metrics.gm.unwrap();
        assert!(gm.mse < 1e-2, "gm mse {}", gm.mse);
    }

    #[test]
    fn pipeline_rejects_bad_params() {
        let clean = ImageTensor::constant(8, 8, 0.5).unwrap();
        let p = DenoiseParams { dt_gm: 0.3, ..DenoiseParams::default() };
        assert!(matches!(run_pipeline(&clean, &p, true, true, 1), Err(Error::Domain(_))));
        let p = DenoiseParams { stretch_strength: 1.2, ..DenoiseParams::default() };
        assert!(p.validate().is_err());
        let p = DenoiseParams { k_pm: 0.0, ..DenoiseParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn params_serde_round_trip() {
        let p = DenoiseParams { sigma_noise: 0.18, seed: 11, ..DenoiseParams::default() };
        let s = serde_json::to_string(&p).unwrap();
        let q: DenoiseParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        // partial configs fall back to defaults
        let q: DenoiseParams = serde_json::from_str("{\"sigma_noise\": 0.18}").unwrap();
        assert_eq!(q.steps_gm, 400);
        assert!(serde_json::from_str::<DenoiseParams>("{\"bogus\": 1}").is_err());
    }
}
