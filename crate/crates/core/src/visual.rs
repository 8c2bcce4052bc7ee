//! Local view templates: camera frame → greyscale → 1D column profile, and
//! shift-tolerant matching against the template store.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a template store.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TemplateId(pub usize);

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of matching a template against a store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatchResult {
    Matched {
        id: TemplateId,
        distance: f64,
    },
    /// Nothing within threshold; `id` is the id the template gets once the
    /// caller appends it. `distance` is the best distance seen (infinite for
    /// an empty store).
    Novel {
        id: TemplateId,
        distance: f64,
    },
    /// No sensory evidence this cycle (tactile only). Never stored.
    NoContact,
}

impl MatchResult {
    pub fn matched_id(&self) -> Option<TemplateId> {
        match *self {
            MatchResult::Matched { id, .. } => Some(id),
            _ => None,
        }
    }

    /// Id bound to this cycle's observation, whether matched or newly minted.
    pub fn template_id(&self) -> Option<TemplateId> {
        match *self {
            MatchResult::Matched { id, .. } | MatchResult::Novel { id, .. } => Some(id),
            MatchResult::NoContact => None,
        }
    }

    pub fn is_novel(&self) -> bool {
        matches!(self, MatchResult::Novel { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::param(
                "pixels",
                format!(
                    "expected {} bytes for {width}x{height}, got {}",
                    width * height * 3,
                    pixels.len()
                ),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = std::iter::repeat_n(rgb, width * height).flatten().collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, col: usize, row: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Greyscale image with intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

pub fn to_grayscale(img: &RgbImage) -> Result<GrayImage> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::EmptyImage);
    }
    let data = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            (LUMA[0] * f64::from(p[0]) + LUMA[1] * f64::from(p[1]) + LUMA[2] * f64::from(p[2]))
                / 255.0
        })
        .collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Column-mean profile, box-downsampled to `profile_len` and normalized so
/// that its mean sits at 0.5 and its largest excursion reaches 0 or 1.
pub fn extract_view_template(gray: &GrayImage, profile_len: usize) -> Result<Vec<f64>> {
    if profile_len == 0 {
        return Err(Error::param("profile_len", "must be positive"));
    }
    if gray.width == 0 || gray.height == 0 {
        return Err(Error::EmptyImage);
    }
    if gray.width < profile_len {
        return Err(Error::param(
            "profile_len",
            format!("image width {} is below {profile_len}", gray.width),
        ));
    }

    let columns: Vec<f64> = (0..gray.width)
        .map(|c| (0..gray.height).map(|r| gray.get(c, r)).sum::<f64>() / gray.height as f64)
        .collect();

    let profile = box_downsample(&columns, profile_len);
    Ok(normalize_profile(&profile))
}

/// Area-weighted box averaging; handles non-integer ratios.
fn box_downsample(src: &[f64], len: usize) -> Vec<f64> {
    let ratio = src.len() as f64 / len as f64;
    (0..len)
        .map(|j| {
            let lo = j as f64 * ratio;
            let hi = (j + 1) as f64 * ratio;
            let mut acc = 0.0;
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < src.len() {
                let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                acc += overlap * src[i];
                i += 1;
            }
            acc / ratio
        })
        .collect()
}

fn normalize_profile(p: &[f64]) -> Vec<f64> {
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let spread = p.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    // below this the profile is flat up to rounding
    if spread < 1e-12 {
        return vec![0.5; p.len()];
    }
    p.iter()
        .map(|v| (0.5 + 0.5 * (v - mean) / spread).clamp(0.0, 1.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisualParams {
    pub profile_len: usize,
    pub max_shift: usize,
    pub threshold: f64,
}

impl Default for VisualParams {
    fn default() -> Self {
        Self {
            profile_len: 60,
            max_shift: 10,
            threshold: 0.035,
        }
    }
}

impl VisualParams {
    pub fn validate(&self) -> Result<()> {
        if self.profile_len == 0 {
            return Err(Error::param("visual.profile_len", "must be positive"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::param("visual.threshold", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewTemplate {
    pub id: TemplateId,
    pub profile: Vec<f64>,
    pub learned_pose_cell: [f64; 3],
}

/// Mean absolute difference between `a` and `b` circularly shifted by
/// `shift` (positive moves `b` right).
pub fn shifted_distance(a: &[f64], b: &[f64], shift: isize) -> f64 {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n == 0 {
        return 0.0;
    }
    let s = shift.rem_euclid(n as isize) as usize;
    let mut acc = 0.0;
    for (i, av) in a.iter().enumerate() {
        let j = (i + n - s) % n;
        acc += (av - b[j]).abs();
    }
    acc / n as f64
}

/// Minimum over shifts in `[-max_shift, max_shift]`.
pub fn profile_distance(a: &[f64], b: &[f64], max_shift: usize) -> f64 {
    let m = max_shift as isize;
    (-m..=m)
        .map(|s| shifted_distance(a, b, s))
        .fold(f64::INFINITY, f64::min)
}

pub fn match_view_template(
    current: &[f64],
    store: &[ViewTemplate],
    threshold: f64,
    max_shift: usize,
) -> Result<MatchResult> {
    if !(threshold > 0.0) {
        return Err(Error::param("threshold", "must be positive"));
    }
    Ok(match_view_template_unchecked(
        current, store, threshold, max_shift,
    ))
}

/// Matching without the threshold precondition; a zero threshold makes every
/// inexact frame novel.
pub fn match_view_template_unchecked(
    current: &[f64],
    store: &[ViewTemplate],
    threshold: f64,
    max_shift: usize,
) -> MatchResult {
    let mut best: Option<(TemplateId, f64)> = None;
    for t in store {
        if t.profile.len() != current.len() {
            continue;
        }
        let d = profile_distance(current, &t.profile, max_shift);
        // strict < keeps the lowest id on ties since the store is id-ordered
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((t.id, d));
        }
    }
    match best {
        Some((id, distance)) if distance <= threshold => MatchResult::Matched { id, distance },
        Some((_, distance)) => MatchResult::Novel {
            id: TemplateId(store.len()),
            distance,
        },
        None => MatchResult::Novel {
            id: TemplateId(store.len()),
            distance: f64::INFINITY,
        },
    }
}
