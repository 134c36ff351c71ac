//! Image normalization, pileup encoding, report sectioning, length filters,
//! augmentation, and class rebalancing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Sample;
use crate::rng;

/// Side length of the square model input.
pub const TARGET_SIDE: usize = 224;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("image data length {len} does not match {height}x{width}x{channels}")]
    DataLength {
        height: usize,
        width: usize,
        channels: usize,
        len: usize,
    },
    #[error("unsupported channel count {0}")]
    Channels(usize),
    #[error("zero-sized image")]
    ZeroSized,
    #[error("expected pileup shape 100x221x6, got {0}x{1}x{2}")]
    PileupShape(usize, usize, usize),
    #[error("unsectioned report")]
    Unsectioned,
    #[error("unknown augmentation `{0}`")]
    UnknownAugmentation(String),
    #[error("sample `{0}` has no class_index")]
    MissingClass(String),
}

/// Row-major 8-bit image, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self, PreprocessError> {
        if !matches!(channels, 1 | 3 | 6) {
            return Err(PreprocessError::Channels(channels));
        }
        if data.len() != height * width * channels {
            return Err(PreprocessError::DataLength {
                height,
                width,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self, PreprocessError> {
        Self::new(height, width, channels, vec![0; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[self.offset(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: u8) {
        let o = self.offset(y, x, c);
        self.data[o] = v;
    }

    fn with_data(&self, data: Vec<u8>) -> Self {
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }
}

/// Where the scaled content sits inside a padded square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentBox {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

fn to_u8(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

/// `round_half_up(len * target / longest)` in exact integer arithmetic.
fn scaled_len(len: usize, longest: usize, target: usize) -> usize {
    ((2 * len * target + longest) / (2 * longest)).max(1)
}

fn resize_bilinear(image: &ImageTensor, out_h: usize, out_w: usize) -> ImageTensor {
    let (h, w, ch) = (image.height, image.width, image.channels);
    if out_h == h && out_w == w {
        return image.clone();
    }
    let sy = h as f64 / out_h as f64;
    let sx = w as f64 / out_w as f64;
    let coord = |dst: usize, scale: f64, len: usize| -> (usize, usize, f64) {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = libm::floor(src) as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, src - i0 as f64)
    };
    let mut data = vec![0u8; out_h * out_w * ch];
    for y in 0..out_h {
        let (y0, y1, fy) = coord(y, sy, h);
        for x in 0..out_w {
            let (x0, x1, fx) = coord(x, sx, w);
            for c in 0..ch {
                let top = image.get(y0, x0, c) as f64 * (1.0 - fx) + image.get(y0, x1, c) as f64 * fx;
                let bottom = image.get(y1, x0, c) as f64 * (1.0 - fx) + image.get(y1, x1, c) as f64 * fx;
                data[(y * out_w + x) * ch + c] = to_u8(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    ImageTensor {
        height: out_h,
        width: out_w,
        channels: ch,
        data,
    }
}

/// Scales the longer side to `target_side` (bilinear, aspect preserved,
/// shorter side rounded half-up) and zero-pads to a centered square.
pub fn resize_pad(image: &ImageTensor, target_side: usize) -> Result<ImageTensor, PreprocessError> {
    resize_pad_with_box(image, target_side).map(|(img, _)| img)
}

pub fn resize_pad_with_box(
    image: &ImageTensor,
    target_side: usize,
) -> Result<(ImageTensor, ContentBox), PreprocessError> {
    if !matches!(image.channels, 1 | 3) {
        return Err(PreprocessError::Channels(image.channels));
    }
    if image.height == 0 || image.width == 0 || target_side == 0 {
        return Err(PreprocessError::ZeroSized);
    }
    let longest = image.height.max(image.width);
    let content_h = scaled_len(image.height, longest, target_side);
    let content_w = scaled_len(image.width, longest, target_side);
    let scaled = resize_bilinear(image, content_h, content_w);
    let top = (target_side - content_h) / 2;
    let left = (target_side - content_w) / 2;
    let ch = image.channels;
    let mut out = ImageTensor::zeros(target_side, target_side, ch)?;
    for y in 0..content_h {
        let src = &scaled.data[y * content_w * ch..(y + 1) * content_w * ch];
        let start = out.offset(top + y, left, 0);
        out.data[start..start + src.len()].copy_from_slice(src);
    }
    Ok((
        out,
        ContentBox {
            top,
            left,
            height: content_h,
            width: content_w,
        },
    ))
}

/// Replicates a single-channel image into three identical channels.
pub fn gray_to_rgb(image: &ImageTensor) -> Result<ImageTensor, PreprocessError> {
    if image.channels != 1 {
        return Err(PreprocessError::Channels(image.channels));
    }
    let data = image.data.iter().flat_map(|&v| [v, v, v]).collect();
    ImageTensor::new(image.height, image.width, 3, data)
}

/// Resize, pad, and promote to three channels: the common input transform.
pub fn conform(image: &ImageTensor) -> Result<ImageTensor, PreprocessError> {
    let squared = resize_pad(image, TARGET_SIDE)?;
    if squared.channels == 1 {
        gray_to_rgb(&squared)
    } else {
        Ok(squared)
    }
}

pub const PILEUP_HEIGHT: usize = 100;
pub const PILEUP_WIDTH: usize = 221;
pub const PILEUP_CHANNELS: usize = 6;
pub const PILEUP_PAD_TOP: usize = 12;
pub const PILEUP_PAD_BOTTOM: usize = 12;
pub const PILEUP_PAD_LEFT: usize = 1;
pub const PILEUP_PAD_RIGHT: usize = 2;

/// Meaning of the six pileup channels, in input order. Informational only;
/// the codec routes values without interpreting them.
pub const PILEUP_CHANNEL_SEMANTICS: [(&str, &str); PILEUP_CHANNELS] = [
    ("read base", "different intensities represent A, C, G, and T"),
    ("base quality", "white is higher quality"),
    ("mapping quality", "white is higher quality"),
    ("strand of alignment", "black is forward; white is reverse"),
    (
        "read supports variant",
        "white supports the alternate allele, grey does not",
    ),
    ("base differs from reference", "white differs, dark grey matches"),
];

/// Stacks channels 1-3 over channels 4-5-6 (200x221x3) and zero-pads to
/// 224x224x3 with 12/12 rows and 1/2 columns.
pub fn encode_pileup(example: &ImageTensor) -> Result<ImageTensor, PreprocessError> {
    if (example.height, example.width, example.channels) != (PILEUP_HEIGHT, PILEUP_WIDTH, PILEUP_CHANNELS) {
        return Err(PreprocessError::PileupShape(
            example.height,
            example.width,
            example.channels,
        ));
    }
    let out_h = PILEUP_PAD_TOP + 2 * PILEUP_HEIGHT + PILEUP_PAD_BOTTOM;
    let out_w = PILEUP_PAD_LEFT + PILEUP_WIDTH + PILEUP_PAD_RIGHT;
    let mut out = ImageTensor::zeros(out_h, out_w, 3)?;
    for y in 0..PILEUP_HEIGHT {
        for x in 0..PILEUP_WIDTH {
            for c in 0..3 {
                out.set(PILEUP_PAD_TOP + y, PILEUP_PAD_LEFT + x, c, example.get(y, x, c));
                out.set(
                    PILEUP_PAD_TOP + PILEUP_HEIGHT + y,
                    PILEUP_PAD_LEFT + x,
                    c,
                    example.get(y, x, c + 3),
                );
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportSections {
    pub indication: Option<String>,
    pub findings: Option<String>,
    pub impression: Option<String>,
}

impl ReportSections {
    /// Renders sections under their canonical headings, one per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (heading, body) in [
            ("INDICATION", &self.indication),
            ("FINDINGS", &self.findings),
            ("IMPRESSION", &self.impression),
        ] {
            if let Some(body) = body {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(heading);
                out.push_str(": ");
                out.push_str(body);
            }
        }
        out
    }
}

/// Collapses whitespace runs to single spaces and trims.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

const SECTION_HEADINGS: [&str; 3] = ["indication:", "findings:", "impression:"];

#[derive(Debug, Clone, Copy)]
struct Boundary {
    start: usize,
    body_start: usize,
    section: Option<usize>,
}

/// Fully upper-case `WORDS:` heading at the start of a line (e.g.
/// `COMPARISON:`). These end the preceding section but are not extracted.
fn line_heading_end(bytes: &[u8], line_start: usize) -> Option<(usize, usize)> {
    let mut i = line_start;
    while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
        i += 1;
    }
    let start = i;
    let mut letters = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'A'..=b'Z' => letters += 1,
            b' ' | b'/' | b'(' | b')' | b'-' | b'&' => {}
            b':' if letters >= 2 => return Some((start, i + 1)),
            _ => return None,
        }
        i += 1;
    }
    None
}

fn find_boundaries(raw: &str) -> Vec<Boundary> {
    let bytes = raw.as_bytes();
    let mut out = Vec::new();
    for i in 0..bytes.len() {
        let at_word_start = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        if at_word_start {
            for (section, heading) in SECTION_HEADINGS.iter().enumerate() {
                let h = heading.as_bytes();
                if bytes.len() - i >= h.len() && bytes[i..i + h.len()].eq_ignore_ascii_case(h) {
                    out.push(Boundary {
                        start: i,
                        body_start: i + h.len(),
                        section: Some(section),
                    });
                }
            }
        }
        if i == 0 || bytes[i - 1] == b'\n' {
            if let Some((start, end)) = line_heading_end(bytes, i) {
                out.push(Boundary {
                    start,
                    body_start: end,
                    section: None,
                });
            }
        }
    }
    out.sort_by_key(|b| (b.start, b.section.is_none()));
    out
}

/// Splits a free-text radiology report into indication, findings, and
/// impression. Headings match case-insensitively; other upper-case
/// line-leading headings terminate a section. Whitespace is collapsed and
/// empty sections are reported as absent.
pub fn extract_sections(raw_report: &str) -> Result<ReportSections, PreprocessError> {
    let boundaries = find_boundaries(raw_report);
    let mut found: [Option<String>; 3] = [None, None, None];
    let mut any_heading = false;
    for (k, b) in boundaries.iter().enumerate() {
        let Some(section) = b.section else { continue };
        any_heading = true;
        let end = boundaries[k + 1..]
            .iter()
            .find(|next| next.start >= b.body_start)
            .map_or(raw_report.len(), |next| next.start);
        let body = collapse_whitespace(&raw_report[b.body_start..end]);
        if !body.is_empty() && found[section].is_none() {
            found[section] = Some(body);
        }
    }
    if !any_heading || found.iter().all(Option::is_none) {
        return Err(PreprocessError::Unsectioned);
    }
    let [indication, findings, impression] = found;
    Ok(ReportSections {
        indication,
        findings,
        impression,
    })
}

pub const CXR_FINDINGS_MAX_CHARS: usize = 800;
pub const MIMIC_III_FINDINGS_MAX_TOKENS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthRule {
    /// Keep findings of at most this many characters.
    MaxChars(usize),
    /// Keep findings of at most this many whitespace-separated tokens.
    MaxTokens(usize),
}

impl LengthRule {
    pub fn for_task(task_id: &str) -> Option<LengthRule> {
        match task_id {
            "mimic_cxr_report" => Some(LengthRule::MaxChars(CXR_FINDINGS_MAX_CHARS)),
            "mimic_iii" => Some(LengthRule::MaxTokens(MIMIC_III_FINDINGS_MAX_TOKENS)),
            _ => None,
        }
    }

    pub fn accepts(self, findings: &str) -> bool {
        match self {
            LengthRule::MaxChars(n) => findings.chars().count() <= n,
            LengthRule::MaxTokens(n) => findings.split_whitespace().count() <= n,
        }
    }
}

/// Applies the task's findings-length rule. Reports without findings never
/// pass; tasks without a rule always pass.
pub fn passes_length_filter(sections: &ReportSections, task_id: &str) -> bool {
    let Some(findings) = sections.findings.as_deref() else {
        return false;
    };
    LengthRule::for_task(task_id).is_none_or(|rule| rule.accepts(findings))
}

// Augmentation.

/// Magnitude used for every augmentation, on a 0..=30 scale.
pub const AUGMENT_MAGNITUDE: u32 = 10;
pub const AUGMENT_MAX_MAGNITUDE: u32 = 30;
/// Number of distinct operations applied per call.
pub const AUGMENT_OPS_PER_CALL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AugmentOp {
    AutoContrast,
    Equalize,
    Invert,
    Rotate,
    Posterize,
    Solarize,
    Color,
    Contrast,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 12] = [
        AugmentOp::AutoContrast,
        AugmentOp::Equalize,
        AugmentOp::Invert,
        AugmentOp::Rotate,
        AugmentOp::Posterize,
        AugmentOp::Solarize,
        AugmentOp::Color,
        AugmentOp::Contrast,
        AugmentOp::ShearX,
        AugmentOp::ShearY,
        AugmentOp::TranslateX,
        AugmentOp::TranslateY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentOp::AutoContrast => "autoContrast",
            AugmentOp::Equalize => "equalize",
            AugmentOp::Invert => "invert",
            AugmentOp::Rotate => "rotate",
            AugmentOp::Posterize => "posterize",
            AugmentOp::Solarize => "solarize",
            AugmentOp::Color => "color",
            AugmentOp::Contrast => "contrast",
            AugmentOp::ShearX => "shearX",
            AugmentOp::ShearY => "shearY",
            AugmentOp::TranslateX => "translateX",
            AugmentOp::TranslateY => "translateY",
        }
    }

    pub fn parse(name: &str) -> Result<AugmentOp, PreprocessError> {
        AugmentOp::ALL
            .into_iter()
            .find(|op| op.name() == name)
            .ok_or_else(|| PreprocessError::UnknownAugmentation(name.to_string()))
    }

    /// Training-set augmentation per dataset; `None` for tasks trained
    /// without augmentation.
    pub fn set_for_task(task_id: &str) -> Option<&'static [AugmentOp]> {
        use AugmentOp::*;
        const DERM: [AugmentOp; 8] = [
            AutoContrast,
            Equalize,
            Invert,
            Rotate,
            Posterize,
            Solarize,
            Color,
            Contrast,
        ];
        const MAMMO: [AugmentOp; 7] = [Contrast, Equalize, Rotate, ShearX, ShearY, TranslateX, TranslateY];
        match task_id {
            "pad_ufes_20" => Some(&DERM),
            "vindr_mammo" | "cbis_ddsm" => Some(&MAMMO),
            _ => None,
        }
    }
}

pub fn parse_ops(names: &[&str]) -> Result<Vec<AugmentOp>, PreprocessError> {
    names.iter().map(|n| AugmentOp::parse(n)).collect()
}

fn map_values(image: &ImageTensor, f: impl Fn(u8) -> u8) -> ImageTensor {
    image.with_data(image.data.iter().map(|&v| f(v)).collect())
}

pub fn invert(image: &ImageTensor) -> ImageTensor {
    map_values(image, |v| 255 - v)
}

/// Keeps the top `bits` bits of every value.
pub fn posterize(image: &ImageTensor, bits: u32) -> ImageTensor {
    let mask = if bits >= 8 { 0xFF } else { !((1u8 << (8 - bits)) - 1) };
    map_values(image, |v| v & mask)
}

/// Inverts values at or above `threshold`.
pub fn solarize(image: &ImageTensor, threshold: u32) -> ImageTensor {
    map_values(image, |v| if u32::from(v) >= threshold { 255 - v } else { v })
}

fn per_channel(image: &ImageTensor, mut lut_for: impl FnMut(&[u32; 256]) -> Option<[u8; 256]>) -> ImageTensor {
    let ch = image.channels;
    let mut out = image.clone();
    for c in 0..ch {
        let mut hist = [0u32; 256];
        for px in image.data.chunks_exact(ch) {
            hist[px[c] as usize] += 1;
        }
        if let Some(lut) = lut_for(&hist) {
            for px in out.data.chunks_exact_mut(ch) {
                px[c] = lut[px[c] as usize];
            }
        }
    }
    out
}

/// Stretches each channel's [min, max] to [0, 255], truncating.
pub fn auto_contrast(image: &ImageTensor) -> ImageTensor {
    per_channel(image, |hist| {
        let lo = hist.iter().position(|&n| n > 0)?;
        let hi = hist.iter().rposition(|&n| n > 0)?;
        if hi <= lo {
            return None;
        }
        let mut lut = [0u8; 256];
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = (v.saturating_sub(lo) * 255 / (hi - lo)).min(255) as u8;
        }
        Some(lut)
    })
}

/// Per-channel histogram equalization (cumulative-count lookup table).
pub fn equalize(image: &ImageTensor) -> ImageTensor {
    per_channel(image, |hist| {
        let total: u32 = hist.iter().sum();
        let last = hist.iter().rev().find(|&&n| n > 0).copied().unwrap_or(0);
        let step = (total - last) / 255;
        if step == 0 {
            return None;
        }
        let mut lut = [0u8; 256];
        let mut n = step / 2;
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = (n / step).min(255) as u8;
            n += hist[v];
        }
        Some(lut)
    })
}

fn luminance(px: &[u8]) -> f64 {
    if px.len() >= 3 {
        (299.0 * px[0] as f64 + 587.0 * px[1] as f64 + 114.0 * px[2] as f64) / 1000.0
    } else {
        px[0] as f64
    }
}

/// Blends each pixel with its grey level: factor 0 is greyscale, 1 is the
/// original. Single-channel images are returned unchanged.
pub fn adjust_color(image: &ImageTensor, factor: f64) -> ImageTensor {
    if image.channels == 1 {
        return image.clone();
    }
    let ch = image.channels;
    let mut out = image.clone();
    for px in out.data.chunks_exact_mut(ch) {
        let grey = libm::floor(luminance(px));
        for v in px.iter_mut().take(3) {
            *v = to_u8(grey + factor * (*v as f64 - grey));
        }
    }
    out
}

/// Blends with the mean grey level: factor 0 is flat grey, 1 the original.
pub fn adjust_contrast(image: &ImageTensor, factor: f64) -> ImageTensor {
    let ch = image.channels;
    let n = (image.height * image.width).max(1) as f64;
    let mean_grey = round_half_up(
        image
            .data
            .chunks_exact(ch)
            .map(|px| libm::floor(luminance(px)))
            .sum::<f64>()
            / n,
    );
    map_values(image, |v| to_u8(mean_grey + factor * (v as f64 - mean_grey)))
}

/// Inverse-maps every output pixel through `src_of` with nearest-neighbour
/// sampling; out-of-bounds sources become 0.
fn remap(image: &ImageTensor, src_of: impl Fn(f64, f64) -> (f64, f64)) -> ImageTensor {
    let (h, w, ch) = (image.height, image.width, image.channels);
    let mut data = vec![0u8; h * w * ch];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = src_of(x as f64, y as f64);
            let (sx, sy) = (round_half_up(sx), round_half_up(sy));
            if sx < 0.0 || sy < 0.0 || sx >= w as f64 || sy >= h as f64 {
                continue;
            }
            let (sx, sy) = (sx as usize, sy as usize);
            let dst = (y * w + x) * ch;
            let src = (sy * w + sx) * ch;
            data[dst..dst + ch].copy_from_slice(&image.data[src..src + ch]);
        }
    }
    image.with_data(data)
}

fn center(image: &ImageTensor) -> (f64, f64) {
    ((image.width as f64 - 1.0) / 2.0, (image.height as f64 - 1.0) / 2.0)
}

/// Rotates counter-clockwise by `degrees` about the image center.
pub fn rotate(image: &ImageTensor, degrees: f64) -> ImageTensor {
    let theta = degrees.to_radians();
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let (cx, cy) = center(image);
    remap(image, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (c * dx - s * dy + cx, s * dx + c * dy + cy)
    })
}

/// Horizontal shear about the center row.
pub fn shear_x(image: &ImageTensor, shear: f64) -> ImageTensor {
    let (_, cy) = center(image);
    remap(image, |x, y| (x + shear * (y - cy), y))
}

/// Vertical shear about the center column.
pub fn shear_y(image: &ImageTensor, shear: f64) -> ImageTensor {
    let (cx, _) = center(image);
    remap(image, |x, y| (x, y + shear * (x - cx)))
}

pub fn translate_x(image: &ImageTensor, pixels: f64) -> ImageTensor {
    remap(image, |x, y| (x - pixels, y))
}

pub fn translate_y(image: &ImageTensor, pixels: f64) -> ImageTensor {
    remap(image, |x, y| (x, y - pixels))
}

fn apply_op(image: &ImageTensor, op: AugmentOp, rng: &mut rng::Rng) -> ImageTensor {
    let level = AUGMENT_MAGNITUDE as f64 / AUGMENT_MAX_MAGNITUDE as f64;
    let signed = |rng: &mut rng::Rng, v: f64| if rng::coin(rng) { -v } else { v };
    match op {
        AugmentOp::AutoContrast => auto_contrast(image),
        AugmentOp::Equalize => equalize(image),
        AugmentOp::Invert => invert(image),
        AugmentOp::Posterize => posterize(image, 8 - round_half_up(4.0 * level) as u32),
        AugmentOp::Solarize => solarize(image, 256 - round_half_up(256.0 * level) as u32),
        AugmentOp::Rotate => rotate(image, signed(rng, 30.0 * level)),
        AugmentOp::Color => adjust_color(image, 1.0 + signed(rng, 0.9 * level)),
        AugmentOp::Contrast => adjust_contrast(image, 1.0 + signed(rng, 0.9 * level)),
        AugmentOp::ShearX => shear_x(image, signed(rng, 0.3 * level)),
        AugmentOp::ShearY => shear_y(image, signed(rng, 0.3 * level)),
        AugmentOp::TranslateX => {
            let px = round_half_up(0.45 * level * image.width as f64);
            translate_x(image, signed(rng, px))
        }
        AugmentOp::TranslateY => {
            let px = round_half_up(0.45 * level * image.height as f64);
            translate_y(image, signed(rng, px))
        }
    }
}

/// Applies up to [`AUGMENT_OPS_PER_CALL`] distinct operations drawn from
/// `ops`, in random order and with random direction, at the fixed magnitude.
/// Deterministic in `(image, ops, seed)`.
pub fn augment(image: &ImageTensor, ops: &[AugmentOp], seed: u64) -> ImageTensor {
    let mut rng = rng::seeded(seed);
    let mut pool: Vec<AugmentOp> = ops.to_vec();
    let k = AUGMENT_OPS_PER_CALL.min(pool.len());
    let mut out = image.clone();
    for i in 0..k {
        let j = i + rng::index(&mut rng, pool.len() - i);
        pool.swap(i, j);
        out = apply_op(&out, pool[i], &mut rng);
    }
    out
}

/// Name-based entry point; rejects unknown operation names.
pub fn augment_named(image: &ImageTensor, names: &[&str], seed: u64) -> Result<ImageTensor, PreprocessError> {
    Ok(augment(image, &parse_ops(names)?, seed))
}

// Rebalancing.

/// Per-class duplication factors; classes not listed keep factor 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RebalancePolicy {
    factors: BTreeMap<usize, u32>,
}

impl RebalancePolicy {
    pub fn new(factors: impl IntoIterator<Item = (usize, u32)>) -> Self {
        Self {
            factors: factors.into_iter().map(|(c, f)| (c, f.max(1))).collect(),
        }
    }

    pub fn factor(&self, class_index: usize) -> u32 {
        self.factors.get(&class_index).copied().unwrap_or(1)
    }

    /// BI-RADS 2 to 5 (class indices 1..=4) upsampled three times.
    pub fn vindr_mammo() -> Self {
        Self::new((1..=4).map(|c| (c, 3)))
    }

    /// Positive ("Yes", index 1) upsampled twice.
    pub fn positive_twice() -> Self {
        Self::new([(1, 2)])
    }
}

/// Conditions of the chest X-ray classification task whose positive class
/// is upsampled.
pub const CXR_UPSAMPLED_CONDITIONS: [&str; 4] =
    ["consolidation", "enlarged cardiomediastinum", "fracture", "pneumonia"];

/// How a task's training samples are rebalanced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RebalancePlan {
    /// One policy for every sample.
    Uniform(RebalancePolicy),
    /// Policy applies only to samples whose `context[key]` is one of
    /// `values`; other samples keep factor 1.
    WhenContext {
        key: &'static str,
        values: &'static [&'static str],
        policy: RebalancePolicy,
    },
}

impl RebalancePlan {
    pub fn for_task(task_id: &str) -> Option<RebalancePlan> {
        match task_id {
            "vindr_mammo" => Some(RebalancePlan::Uniform(RebalancePolicy::vindr_mammo())),
            "mimic_cxr_cls" => Some(RebalancePlan::WhenContext {
                key: "condition",
                values: &CXR_UPSAMPLED_CONDITIONS,
                policy: RebalancePolicy::positive_twice(),
            }),
            _ => None,
        }
    }

    pub fn apply(&self, samples: &[Sample]) -> Result<Vec<Sample>, PreprocessError> {
        match self {
            RebalancePlan::Uniform(policy) => rebalance(samples, policy),
            RebalancePlan::WhenContext { key, values, policy } => rebalance_by(samples, |s| {
                let class = s
                    .class_index
                    .ok_or_else(|| PreprocessError::MissingClass(s.sample_id.clone()))?;
                let applies = s
                    .context
                    .get(key)
                    .is_some_and(|v| values.iter().any(|w| w.eq_ignore_ascii_case(v)));
                Ok(if applies { policy.factor(class) } else { 1 })
            }),
        }
    }
}

fn rebalance_by(
    samples: &[Sample],
    factor_of: impl Fn(&Sample) -> Result<u32, PreprocessError>,
) -> Result<Vec<Sample>, PreprocessError> {
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        for _ in 0..factor_of(s)? {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Repeats each sample `policy.factor(class)` times, copies adjacent to the
/// original so first copies keep the input order.
pub fn rebalance(samples: &[Sample], policy: &RebalancePolicy) -> Result<Vec<Sample>, PreprocessError> {
    rebalance_by(samples, |s| {
        s.class_index
            .map(|c| policy.factor(c))
            .ok_or_else(|| PreprocessError::MissingClass(s.sample_id.clone()))
    })
}
