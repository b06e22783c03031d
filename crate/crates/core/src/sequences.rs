//! Sequence directories, the synthetic sequence generator and result files.
//!
//! A sequence directory holds `img/NNNN.ppm` (or `.pgm`) frames and a
//! `groundtruth_rect.txt` with one top-left `x,y,w,h` line per frame. Frames are
//! binary portable pixmaps/graymaps.

use std::fmt::Write as _;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{BoundingBox, ImageRaster};
use crate::pfilter::FrameReport;

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTES_FILE: &str = "attributes.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<ImageRaster>,
    pub ground_truth: Option<Vec<BoundingBox>>,
    /// Challenge tags such as `occlusion`, `blur`, `clutter`; `easy` when there are none.
    pub attributes: Vec<String>,
}

impl Sequence {
    pub fn new(
        name: impl Into<String>,
        frames: Vec<ImageRaster>,
        ground_truth: Option<Vec<BoundingBox>>,
        attributes: Vec<String>,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::CountMismatch(format!(
                "a sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != frames.len() {
                return Err(Error::CountMismatch(format!(
                    "{} frames but {} ground-truth boxes",
                    frames.len(),
                    gt.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            frames,
            ground_truth,
            attributes,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// First attribute, used for grouping in reports.
    pub fn primary_attribute(&self) -> &str {
        self.attributes
            .first()
            .map(String::as_str)
            .unwrap_or("easy")
    }
}

// ---------------------------------------------------------------------------
// Portable any-map I/O

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes a raster as binary PGM (1 channel) or PPM (3 channels), maxval 255.
pub fn encode_pnm(img: &ImageRaster) -> Vec<u8> {
    let (kind, color) = if img.channels() == 1 {
        (
            PnmSubtype::Graymap(SampleEncoding::Binary),
            ExtendedColorType::L8,
        )
    } else {
        (
            PnmSubtype::Pixmap(SampleEncoding::Binary),
            ExtendedColorType::Rgb8,
        )
    };
    let data: Vec<u8> = img.values().iter().map(|&v| quantize(v)).collect();
    let mut out = Vec::with_capacity(data.len() + 16);
    PnmEncoder::new(&mut out)
        .with_subtype(kind)
        .write_image(&data, img.width() as u32, img.height() as u32, color)
        .expect("in-memory PNM encoding");
    out
}

pub fn write_pnm(path: &Path, img: &ImageRaster) -> Result<()> {
    fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
}

fn image_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Decodes binary PGM/PPM, 8 or 16 bit. Samples are scaled to `[0, 1]`.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<ImageRaster> {
    let decoder =
        PnmDecoder::new(Cursor::new(bytes)).map_err(|e| image_error(path, e.to_string()))?;
    match decoder.subtype() {
        PnmSubtype::Graymap(SampleEncoding::Binary)
        | PnmSubtype::Pixmap(SampleEncoding::Binary) => {}
        other => return Err(image_error(path, format!("unsupported format {other:?}"))),
    }
    let decoded =
        DynamicImage::from_decoder(decoder).map_err(|e| image_error(path, e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, values): (usize, Vec<f64>) = match decoded {
        DynamicImage::ImageLuma8(b) => (
            1,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageRgb8(b) => (
            3,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageLuma16(b) => (
            1,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        DynamicImage::ImageRgb16(b) => (
            3,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        other => {
            return Err(image_error(
                path,
                format!("unsupported color type {:?}", other.color()),
            ))
        }
    };
    ImageRaster::new(width, height, channels, values).map_err(|e| image_error(path, e.to_string()))
}

pub fn read_pnm(path: &Path) -> Result<ImageRaster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes, path)
}

// ---------------------------------------------------------------------------
// Benchmark-format directories

/// Parses top-left `x,y,w,h` lines (comma, tab or space separated) into center boxes.
pub fn parse_ground_truth(text: &str, path: &Path) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == '\t' || c == ' ')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 fields, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|_| parse_err(format!("not a number: {f:?}")))?;
        }
        let b = BoundingBox::from_top_left(v[0], v[1], v[2], v[3])
            .map_err(|e| parse_err(e.to_string()))?;
        boxes.push(b);
    }
    Ok(boxes)
}

/// Frame files under `img/`, sorted by file name.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let img = dir.join("img");
    if !img.is_dir() {
        return Err(Error::MissingFile(img));
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(&img).map_err(|e| Error::io(&img, e))? {
        let p = entry.map_err(|e| Error::io(&img, e))?.path();
        let ext = p
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("ppm" | "pgm" | "pnm")) {
            paths.push(p);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let paths = frame_paths(dir)?;
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    if !gt_path.is_file() {
        return Err(Error::MissingFile(gt_path));
    }
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let gt = parse_ground_truth(&text, &gt_path)?;
    if gt.len() != paths.len() {
        return Err(Error::CountMismatch(format!(
            "{}: {} frames but {} ground-truth lines",
            dir.display(),
            paths.len(),
            gt.len()
        )));
    }
    let frames = paths
        .iter()
        .map(|p| read_pnm(p))
        .collect::<Result<Vec<_>>>()?;
    let attr_path = dir.join(ATTRIBUTES_FILE);
    let attributes = if attr_path.is_file() {
        fs::read_to_string(&attr_path)
            .map_err(|e| Error::io(&attr_path, e))?
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        Vec::new()
    };
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    Sequence::new(name, frames, Some(gt), attributes)
}

/// Writes `img/NNNN.ppm`, the top-left ground truth and the attribute tags.
pub fn save_sequence(dir: &Path, seq: &Sequence) -> Result<()> {
    let img = dir.join("img");
    fs::create_dir_all(&img).map_err(|e| Error::io(&img, e))?;
    for (i, frame) in seq.frames.iter().enumerate() {
        let ext = if frame.channels() == 1 { "pgm" } else { "ppm" };
        write_pnm(&img.join(format!("{:04}.{ext}", i + 1)), frame)?;
    }
    if let Some(gt) = &seq.ground_truth {
        let mut text = String::new();
        for b in gt {
            let _ = writeln!(text, "{},{},{},{}", b.left(), b.top(), b.w, b.h);
        }
        let p = dir.join(GROUND_TRUTH_FILE);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    if !seq.attributes.is_empty() {
        let p = dir.join(ATTRIBUTES_FILE);
        fs::write(&p, seq.attributes.join(",") + "\n").map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Results

/// One row of a results CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    /// 1-based frame number.
    pub frame: usize,
    pub bbox: BoundingBox,
    pub quality_flag: bool,
}

impl From<&FrameReport> for ResultRow {
    fn from(r: &FrameReport) -> Self {
        Self {
            frame: r.index + 1,
            bbox: r.estimate,
            quality_flag: r.quality_flag,
        }
    }
}

pub const RESULTS_HEADER: &str = "frame,cx,cy,w,h,quality_flag";

pub fn format_results(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let b = &r.bbox;
        let _ = writeln!(
            s,
            "{},{:.3},{:.3},{:.3},{:.3},{}",
            r.frame, b.cx, b.cy, b.w, b.h, r.quality_flag as u8
        );
    }
    s
}

/// Writes the per-frame estimates to `path`.
pub fn save_results(path: &Path, reports: &[FrameReport]) -> Result<()> {
    let rows: Vec<ResultRow> = reports.iter().map(ResultRow::from).collect();
    fs::write(path, format_results(&rows)).map_err(|e| Error::io(path, e))
}

/// Per-frame weight diagnostics: component count, effective sample size, largest
/// normalized weight and weight sum.
pub fn save_weight_summary(path: &Path, reports: &[FrameReport]) -> Result<()> {
    let mut s = String::from("frame,k,ess,max_weight,weight_sum\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{:.3},{:.6},{:.12}",
            r.index + 1,
            r.k,
            r.effective_sample_size,
            r.max_weight,
            r.weight_sum
        );
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected header {RESULTS_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("not a number: {s:?}")))
        };
        let frame = f[0]
            .parse::<usize>()
            .map_err(|_| err(format!("bad frame {:?}", f[0])))?;
        let bbox = BoundingBox::new(num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?)
            .map_err(|e| err(e.to_string()))?;
        let quality_flag = match f[5] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("bad quality flag {other:?}"))),
        };
        rows.push(ResultRow {
            frame,
            bbox,
            quality_flag,
        });
    }
    Ok(rows)
}

/// Draws a 2-pixel red outline just inside `b`, clipped to the frame.
pub fn draw_box(frame: &ImageRaster, b: &BoundingBox) -> ImageRaster {
    let (w, h) = (frame.width(), frame.height());
    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            if frame.channels() == 3 {
                for c in 0..3 {
                    rgb.push(frame.get(x, y, c));
                }
            } else {
                let v = frame.get(x, y, 0);
                rgb.extend([v, v, v]);
            }
        }
    }
    let x0 = b.left().round() as i64;
    let y0 = b.top().round() as i64;
    let x1 = b.right().round() as i64 - 1;
    let y1 = b.bottom().round() as i64 - 1;
    for y in y0.max(0)..=y1.min(h as i64 - 1) {
        for x in x0.max(0)..=x1.min(w as i64 - 1) {
            let on_edge = x - x0 < 2 || x1 - x < 2 || y - y0 < 2 || y1 - y < 2;
            if on_edge {
                let i = (y as usize * w + x as usize) * 3;
                rgb[i..i + 3].copy_from_slice(&[1.0, 0.0, 0.0]);
            }
        }
    }
    ImageRaster::new(w, h, 3, rgb).expect("overlay raster is valid")
}

pub fn save_overlays(dir: &Path, seq: &Sequence, boxes: &[BoundingBox]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, (frame, b)) in seq.frames.iter().zip(boxes).enumerate() {
        write_pnm(&dir.join(format!("{:04}.ppm", i + 1)), &draw_box(frame, b))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic sequences

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccluderTexture {
    /// Same texture as the target, which produces a second response peak.
    Target,
    /// Uniform gray.
    Flat,
    /// Block texture of its own, drawn from the given seed.
    Pattern(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthEvent {
    /// A box moving with constant velocity, drawn over everything in frames `start..=end`.
    Occlusion {
        start: usize,
        end: usize,
        occluder: BoundingBox,
        velocity: (f64, f64),
        texture: OccluderTexture,
    },
    /// Box blur of `length` pixels along the target's motion in frames `start..=end`.
    Blur {
        start: usize,
        end: usize,
        length: usize,
    },
    /// Static decoy squares with their own textures, drawn behind the target.
    Clutter { count: usize },
}

impl SynthEvent {
    pub fn attribute(&self) -> &'static str {
        match self {
            SynthEvent::Occlusion { .. } => "occlusion",
            SynthEvent::Blur { .. } => "blur",
            SynthEvent::Clutter { .. } => "clutter",
        }
    }

    /// Whether frame `t` lies in the event's range. Clutter spans the sequence.
    pub fn active(&self, t: usize) -> bool {
        match *self {
            SynthEvent::Occlusion { start, end, .. } | SynthEvent::Blur { start, end, .. } => {
                (start..=end).contains(&t)
            }
            SynthEvent::Clutter { .. } => true,
        }
    }
}

/// Waypoint: target center at a given 0-based frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub name: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub target_w: f64,
    pub target_h: f64,
    pub texture_seed: u64,
    /// Texel size of the target texture in pixels.
    pub texture_block: usize,
    /// Contrast of the static background texture (0 gives a flat background).
    pub background_contrast: f64,
    pub waypoints: Vec<Waypoint>,
    /// Per-frame Gaussian jitter of the target center.
    pub noise_sigma: f64,
    pub events: Vec<SynthEvent>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            frames: 60,
            width: 160,
            height: 120,
            target_w: 24.0,
            target_h: 24.0,
            texture_seed: 1,
            texture_block: 3,
            background_contrast: 0.2,
            waypoints: vec![
                Waypoint {
                    frame: 0,
                    x: 40.0,
                    y: 60.0,
                },
                Waypoint {
                    frame: 59,
                    x: 120.0,
                    y: 60.0,
                },
            ],
            noise_sigma: 0.0,
            events: Vec::new(),
        }
    }
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(spec_err("frames must be at least 2"));
        }
        if self.width < 8 || self.height < 8 {
            return Err(spec_err("canvas must be at least 8x8"));
        }
        if !(self.target_w >= 4.0 && self.target_h >= 4.0) {
            return Err(spec_err("target must be at least 4x4"));
        }
        if self.texture_block == 0 {
            return Err(spec_err("texture_block must be positive"));
        }
        if !(self.noise_sigma >= 0.0) || !(0.0..=0.5).contains(&self.background_contrast) {
            return Err(spec_err(
                "noise_sigma must be >= 0 and background_contrast in [0, 0.5]",
            ));
        }
        if self.waypoints.is_empty() {
            return Err(spec_err("at least one waypoint required"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !(w.x >= 0.0 && w.x <= self.width as f64 && w.y >= 0.0 && w.y <= self.height as f64)
            {
                return Err(spec_err(format!(
                    "waypoint {} lies outside the canvas",
                    i + 1
                )));
            }
            if w.frame >= self.frames {
                return Err(spec_err(format!(
                    "waypoint {} frame {} beyond the sequence",
                    i + 1,
                    w.frame
                )));
            }
            if i > 0 && w.frame <= self.waypoints[i - 1].frame {
                return Err(spec_err("waypoint frames must increase"));
            }
        }
        for e in &self.events {
            match e {
                SynthEvent::Occlusion {
                    start,
                    end,
                    occluder,
                    ..
                } => {
                    if start > end || *end >= self.frames {
                        return Err(spec_err(format!(
                            "occlusion range {start}..{end} outside the sequence"
                        )));
                    }
                    occluder.validate().map_err(|e| spec_err(e.to_string()))?;
                }
                SynthEvent::Blur { start, end, length } => {
                    if start > end || *end >= self.frames {
                        return Err(spec_err(format!(
                            "blur range {start}..{end} outside the sequence"
                        )));
                    }
                    if *length == 0 {
                        return Err(spec_err("blur length must be positive"));
                    }
                }
                SynthEvent::Clutter { .. } => {}
            }
        }
        Ok(())
    }

    /// Piecewise-linear waypoint interpolation, constant beyond the ends.
    pub fn waypoint_center(&self, t: usize) -> (f64, f64) {
        let wp = &self.waypoints;
        if t <= wp[0].frame {
            return (wp[0].x, wp[0].y);
        }
        for pair in wp.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.frame {
                let s = (t - a.frame) as f64 / (b.frame - a.frame) as f64;
                return (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
            }
        }
        let last = wp[wp.len() - 1];
        (last.x, last.y)
    }

    pub fn attributes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.events {
            let a = e.attribute().to_string();
            if !out.contains(&a) {
                out.push(a);
            }
        }
        if out.is_empty() {
            out.push("easy".into());
        }
        out
    }

    /// Parses the flat `key=value` format. See `docs/synth-spec.md`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SynthSpec {
            waypoints: Vec::new(),
            ..SynthSpec::default()
        };
        let mut stanza: Option<(usize, Vec<(String, String, usize)>)> = None;
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "[event]" {
                if let Some((start, fields)) = stanza.take() {
                    events.push(parse_event(start, &fields)?);
                }
                stanza = Some((line_no, Vec::new()));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| spec_err(format!("line {line_no}: expected key=value")))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if let Some((_, fields)) = stanza.as_mut() {
                fields.push((key, value, line_no));
                continue;
            }
            let bad = |what: &str| spec_err(format!("line {line_no}: invalid {what} {value:?}"));
            match key.as_str() {
                "name" => spec.name = value.clone(),
                "frames" => spec.frames = value.parse().map_err(|_| bad("frames"))?,
                "width" => spec.width = value.parse().map_err(|_| bad("width"))?,
                "height" => spec.height = value.parse().map_err(|_| bad("height"))?,
                "target_size" => {
                    let v = parse_floats(&value).ok_or_else(|| bad("target_size"))?;
                    match v.as_slice() {
                        [s] => (spec.target_w, spec.target_h) = (*s, *s),
                        [w, h] => (spec.target_w, spec.target_h) = (*w, *h),
                        _ => return Err(bad("target_size")),
                    }
                }
                "texture_seed" => {
                    spec.texture_seed = value.parse().map_err(|_| bad("texture_seed"))?
                }
                "texture_block" => {
                    spec.texture_block = value.parse().map_err(|_| bad("texture_block"))?
                }
                "background_contrast" => {
                    spec.background_contrast =
                        value.parse().map_err(|_| bad("background_contrast"))?
                }
                "noise_sigma" => {
                    spec.noise_sigma = value.parse().map_err(|_| bad("noise_sigma"))?
                }
                "waypoint" => {
                    let v = parse_floats(&value).ok_or_else(|| bad("waypoint"))?;
                    let [frame, x, y] = v.as_slice() else {
                        return Err(bad("waypoint (expected frame,x,y)"));
                    };
                    if *frame < 0.0 || frame.fract() != 0.0 {
                        return Err(bad("waypoint frame"));
                    }
                    spec.waypoints.push(Waypoint {
                        frame: *frame as usize,
                        x: *x,
                        y: *y,
                    });
                }
                _ => return Err(spec_err(format!("line {line_no}: unknown key {key:?}"))),
            }
        }
        if let Some((start, fields)) = stanza.take() {
            events.push(parse_event(start, &fields)?);
        }
        spec.events = events;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name={}", self.name);
        let _ = writeln!(s, "frames={}", self.frames);
        let _ = writeln!(s, "width={}", self.width);
        let _ = writeln!(s, "height={}", self.height);
        let _ = writeln!(s, "target_size={},{}", self.target_w, self.target_h);
        let _ = writeln!(s, "texture_seed={}", self.texture_seed);
        let _ = writeln!(s, "texture_block={}", self.texture_block);
        let _ = writeln!(s, "background_contrast={}", self.background_contrast);
        let _ = writeln!(s, "noise_sigma={}", self.noise_sigma);
        for w in &self.waypoints {
            let _ = writeln!(s, "waypoint={},{},{}", w.frame, w.x, w.y);
        }
        for e in &self.events {
            s.push_str("\n[event]\n");
            let _ = writeln!(s, "type={}", e.attribute());
            match e {
                SynthEvent::Occlusion {
                    start,
                    end,
                    occluder,
                    velocity,
                    texture,
                } => {
                    let _ = writeln!(s, "start={start}\nend={end}");
                    let _ = writeln!(
                        s,
                        "box={},{},{},{}",
                        occluder.cx, occluder.cy, occluder.w, occluder.h
                    );
                    let _ = writeln!(s, "velocity={},{}", velocity.0, velocity.1);
                    let t = match texture {
                        OccluderTexture::Target => "target".to_string(),
                        OccluderTexture::Flat => "flat".to_string(),
                        OccluderTexture::Pattern(seed) => format!("pattern:{seed}"),
                    };
                    let _ = writeln!(s, "texture={t}");
                }
                SynthEvent::Blur { start, end, length } => {
                    let _ = writeln!(s, "start={start}\nend={end}\nlength={length}");
                }
                SynthEvent::Clutter { count } => {
                    let _ = writeln!(s, "count={count}");
                }
            }
        }
        s
    }
}

fn parse_floats(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect()
}

fn parse_event(line_no: usize, fields: &[(String, String, usize)]) -> Result<SynthEvent> {
    let get = |k: &str| fields.iter().find(|(key, _, _)| key == k);
    for (key, _, l) in fields {
        let known = [
            "type", "start", "end", "box", "velocity", "texture", "length", "count",
        ];
        if !known.contains(&key.as_str()) {
            return Err(spec_err(format!("line {l}: unknown event key {key:?}")));
        }
    }
    let need =
        |k: &str| get(k).ok_or_else(|| spec_err(format!("event at line {line_no}: missing {k}")));
    let int = |k: &str| -> Result<usize> {
        let (_, v, l) = need(k)?;
        v.parse()
            .map_err(|_| spec_err(format!("line {l}: invalid {k} {v:?}")))
    };
    let (_, kind, l) = need("type")?;
    match kind.as_str() {
        "occlusion" => {
            let (_, b, bl) = need("box")?;
            let b = parse_floats(b)
                .filter(|v| v.len() == 4)
                .ok_or_else(|| spec_err(format!("line {bl}: box must be cx,cy,w,h")))?;
            let occluder = BoundingBox::new(b[0], b[1], b[2], b[3])
                .map_err(|e| spec_err(format!("line {bl}: {e}")))?;
            let velocity = match get("velocity") {
                Some((_, v, vl)) => {
                    let v = parse_floats(v)
                        .filter(|v| v.len() == 2)
                        .ok_or_else(|| spec_err(format!("line {vl}: velocity must be vx,vy")))?;
                    (v[0], v[1])
                }
                None => (0.0, 0.0),
            };
            let texture = match get("texture").map(|(_, v, l)| (v.as_str(), l)) {
                None | Some(("flat", _)) => OccluderTexture::Flat,
                Some(("target", _)) => OccluderTexture::Target,
                Some((v, l)) if v.starts_with("pattern:") => {
                    OccluderTexture::Pattern(v["pattern:".len()..].parse().map_err(|_| {
                        spec_err(format!("line {l}: invalid pattern seed in {v:?}"))
                    })?)
                }
                Some((other, l)) => {
                    return Err(spec_err(format!("line {l}: unknown texture {other:?}")))
                }
            };
            Ok(SynthEvent::Occlusion {
                start: int("start")?,
                end: int("end")?,
                occluder,
                velocity,
                texture,
            })
        }
        "blur" => Ok(SynthEvent::Blur {
            start: int("start")?,
            end: int("end")?,
            length: int("length")?,
        }),
        "clutter" => Ok(SynthEvent::Clutter {
            count: int("count")?,
        }),
        other => Err(spec_err(format!("line {l}: unknown event type {other:?}"))),
    }
}

/// Random blocky texture of `w x h` texels in `[0.1, 0.9]`.
fn block_texture(w: usize, h: usize, block: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bw = w.div_ceil(block);
    let bh = h.div_ceil(block);
    let blocks: Vec<f64> = (0..bw * bh).map(|_| rng.random_range(0.1..0.9)).collect();
    let mut tex = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tex[y * w + x] = blocks[(y / block) * bw + x / block];
        }
    }
    tex
}

/// Texture evaluated at texel coordinates with bilinear interpolation between texel
/// centers and edge clamping.
fn texel(tex: &[f64], w: usize, h: usize, u: f64, v: f64) -> f64 {
    let fx = (u - 0.5).clamp(0.0, (w - 1) as f64);
    let fy = (v - 0.5).clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (fx as usize, fy as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
    let top = tex[y0 * w + x0] * (1.0 - ax) + tex[y0 * w + x1] * ax;
    let bottom = tex[y1 * w + x0] * (1.0 - ax) + tex[y1 * w + x1] * ax;
    top * (1.0 - ay) + bottom * ay
}

struct Sprite {
    tex: Vec<f64>,
    tw: usize,
    th: usize,
}

impl Sprite {
    /// Paints the sprite stretched over `b`; a pixel belongs to the box if its center does.
    fn paint(&self, canvas: &mut [f64], cw: usize, ch: usize, b: &BoundingBox) {
        let x_lo = b.left().floor().max(0.0) as usize;
        let y_lo = b.top().floor().max(0.0) as usize;
        let x_hi = (b.right().ceil().max(0.0) as usize).min(cw);
        let y_hi = (b.bottom().ceil().max(0.0) as usize).min(ch);
        let sx = self.tw as f64 / b.w;
        let sy = self.th as f64 / b.h;
        for y in y_lo..y_hi {
            let py = y as f64 + 0.5;
            if py < b.top() || py >= b.bottom() {
                continue;
            }
            for x in x_lo..x_hi {
                let px = x as f64 + 0.5;
                if px < b.left() || px >= b.right() {
                    continue;
                }
                canvas[y * cw + x] = texel(
                    &self.tex,
                    self.tw,
                    self.th,
                    (px - b.left()) * sx,
                    (py - b.top()) * sy,
                );
            }
        }
    }
}

fn background(w: usize, h: usize, contrast: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // smooth random field: bilinear upsampling of a coarse grid of random values
    let step = 16usize;
    let gw = w / step + 2;
    let gh = h / step + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = texel(
                &grid,
                gw,
                gh,
                (x as f64 + 0.5) / step as f64 + 0.5,
                (y as f64 + 0.5) / step as f64 + 0.5,
            );
            out[y * w + x] = 0.5 + contrast * v;
        }
    }
    out
}

/// Averages `length` bilinear samples along `dir`, centered on each pixel.
pub fn motion_blur(img: &ImageRaster, length: usize, dir: (f64, f64)) -> ImageRaster {
    let norm = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
    let (dx, dy) = if norm > 0.0 {
        (dir.0 / norm, dir.1 / norm)
    } else {
        (1.0, 0.0)
    };
    let half = (length as f64 - 1.0) / 2.0;
    ImageRaster::from_fn(img.width(), img.height(), |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut acc = 0.0;
        for k in 0..length {
            let s = k as f64 - half;
            acc += img.sample(px + s * dx, py + s * dy);
        }
        acc / length as f64
    })
    .expect("non-empty raster")
}

fn quantized(values: Vec<f64>, w: usize, h: usize) -> ImageRaster {
    let q: Vec<f64> = values
        .into_iter()
        .map(|v| quantize(v) as f64 / 255.0)
        .collect();
    ImageRaster::new(w, h, 1, q).expect("quantized values are in range")
}

/// Renders a grayscale sequence with exact ground truth. Pixel values are quantized to
/// 8 bits so that a saved and reloaded sequence is identical.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<Sequence> {
    spec.validate()?;
    let (cw, ch) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tex_rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    let tw = spec.target_w.round().max(1.0) as usize;
    let th = spec.target_h.round().max(1.0) as usize;
    let target = Sprite {
        tex: block_texture(tw, th, spec.texture_block, &mut tex_rng),
        tw,
        th,
    };
    let bg = background(cw, ch, spec.background_contrast, &mut rng);

    let mut decoys = Vec::new();
    for e in &spec.events {
        if let SynthEvent::Clutter { count } = e {
            for _ in 0..*count {
                let sprite = Sprite {
                    tex: block_texture(tw, th, spec.texture_block, &mut rng),
                    tw,
                    th,
                };
                let cx = rng.random_range(
                    spec.target_w / 2.0
                        ..(cw as f64 - spec.target_w / 2.0).max(spec.target_w / 2.0 + 1.0),
                );
                let cy = rng.random_range(
                    spec.target_h / 2.0
                        ..(ch as f64 - spec.target_h / 2.0).max(spec.target_h / 2.0 + 1.0),
                );
                decoys.push((
                    sprite,
                    BoundingBox::new(cx, cy, spec.target_w, spec.target_h)?,
                ));
            }
        }
    }
    let flat = Sprite {
        tex: vec![0.5],
        tw: 1,
        th: 1,
    };
    let patterns: Vec<Option<Sprite>> = spec
        .events
        .iter()
        .map(|e| match e {
            SynthEvent::Occlusion {
                occluder,
                texture: OccluderTexture::Pattern(seed),
                ..
            } => {
                let (pw, ph) = (
                    occluder.w.round().max(1.0) as usize,
                    occluder.h.round().max(1.0) as usize,
                );
                let mut prng = ChaCha8Rng::seed_from_u64(*seed);
                Some(Sprite {
                    tex: block_texture(pw, ph, spec.texture_block, &mut prng),
                    tw: pw,
                    th: ph,
                })
            }
            _ => None,
        })
        .collect();

    let jitter = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut frames = Vec::with_capacity(spec.frames);
    let mut gt = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let (mut cx, mut cy) = spec.waypoint_center(t);
        if spec.noise_sigma > 0.0 {
            cx += jitter.sample(&mut rng);
            cy += jitter.sample(&mut rng);
        }
        let b = BoundingBox::new(cx, cy, spec.target_w, spec.target_h)?;
        let mut canvas = bg.clone();
        for (sprite, db) in &decoys {
            sprite.paint(&mut canvas, cw, ch, db);
        }
        target.paint(&mut canvas, cw, ch, &b);
        for (e, pattern) in spec.events.iter().zip(&patterns) {
            if let SynthEvent::Occlusion {
                start,
                end,
                occluder,
                velocity,
                texture,
            } = e
            {
                if (*start..=*end).contains(&t) {
                    let dt = (t - start) as f64;
                    let ob = BoundingBox::new(
                        occluder.cx + velocity.0 * dt,
                        occluder.cy + velocity.1 * dt,
                        occluder.w,
                        occluder.h,
                    )?;
                    let sprite = match texture {
                        OccluderTexture::Target => &target,
                        OccluderTexture::Flat => &flat,
                        OccluderTexture::Pattern(_) => pattern.as_ref().expect("pattern sprite"),
                    };
                    sprite.paint(&mut canvas, cw, ch, &ob);
                }
            }
        }
        let mut frame = ImageRaster::new(cw, ch, 1, canvas)?;
        for e in &spec.events {
            if let SynthEvent::Blur { start, end, length } = e {
                if (*start..=*end).contains(&t) && *length > 1 {
                    let a = spec.waypoint_center(t.saturating_sub(1));
                    let c = spec.waypoint_center((t + 1).min(spec.frames - 1));
                    frame = motion_blur(&frame, *length, (c.0 - a.0, c.1 - a.1));
                }
            }
        }
        frames.push(quantized(frame.into_values(), cw, ch));
        gt.push(b);
    }
    Sequence::new(spec.name.clone(), frames, Some(gt), spec.attributes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn easy(frames: usize) -> SynthSpec {
        SynthSpec {
            frames,
            waypoints: vec![
                Waypoint {
                    frame: 0,
                    x: 40.0,
                    y: 50.0,
                },
                Waypoint {
                    frame: frames - 1,
                    x: 40.0 + 2.0 * (frames - 1) as f64,
                    y: 50.0 + (frames - 1) as f64,
                },
            ],
            ..SynthSpec::default()
        }
    }

    #[test]
    fn pnm_round_trip() {
        let gray = ImageRaster::from_fn(5, 3, |x, y| (x * 3 + y) as f64 / 20.0).unwrap();
        let q = quantized(gray.values().to_vec(), 5, 3);
        assert_eq!(decode_pnm(&encode_pnm(&q), Path::new("x")).unwrap(), q);
        let rgb = ImageRaster::new(2, 1, 3, vec![0.0, 1.0, 51.0 / 255.0, 1.0, 0.0, 0.2]).unwrap();
        let back = decode_pnm(&encode_pnm(&rgb), Path::new("x")).unwrap();
        assert_eq!(back.channels(), 3);
        assert!(back
            .values()
            .iter()
            .zip(rgb.values())
            .all(|(a, b)| (a - b).abs() < 1.0 / 255.0));
    }

    #[test]
    fn pnm_header_comments_and_16_bit() {
        let mut bytes = b"P5\n# comment\n2 1\n65535\n".to_vec();
        bytes.extend([0xff, 0xff, 0x00, 0x00]);
        let img = decode_pnm(&bytes, Path::new("x")).unwrap();
        assert_eq!(img.values(), &[1.0, 0.0]);
        assert!(decode_pnm(b"P3\n1 1\n255\n0", Path::new("x")).is_err());
        assert!(decode_pnm(b"P5\n4 4\n255\n\x00", Path::new("x")).is_err());
    }

    #[test]
    fn ground_truth_separators_and_errors() {
        let gt = parse_ground_truth("0,0,10,10\n1\t2\t4\t6\n3 3 2 2\n", Path::new("g")).unwrap();
        assert_eq!(gt[0].as_array(), [5.0, 5.0, 10.0, 10.0]);
        assert_eq!(gt[1].as_array(), [3.0, 5.0, 4.0, 6.0]);
        assert_eq!(gt[2].as_array(), [4.0, 4.0, 2.0, 2.0]);
        match parse_ground_truth("0,0,10,10\n1,2\n", Path::new("g")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_ground_truth("a,b,c,d", Path::new("g")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn zero_noise_follows_waypoints_exactly() {
        let mut spec = easy(30);
        spec.waypoints.insert(
            1,
            Waypoint {
                frame: 10,
                x: 70.0,
                y: 33.3,
            },
        );
        let seq = generate_synthetic(&spec, 3).unwrap();
        let gt = seq.ground_truth.as_ref().unwrap();
        for (t, b) in gt.iter().enumerate() {
            let (x, y) = spec.waypoint_center(t);
            assert_eq!((b.cx, b.cy, b.w, b.h), (x, y, 24.0, 24.0));
        }
        assert_eq!(spec.waypoint_center(5), (55.0, 50.0 + 0.5 * (33.3 - 50.0)));
    }

    #[test]
    fn generation_is_deterministic() {
        let mut spec = easy(6);
        spec.noise_sigma = 1.5;
        spec.events.push(SynthEvent::Clutter { count: 2 });
        assert_eq!(
            generate_synthetic(&spec, 11).unwrap(),
            generate_synthetic(&spec, 11).unwrap()
        );
        assert_ne!(
            generate_synthetic(&spec, 11).unwrap(),
            generate_synthetic(&spec, 12).unwrap()
        );
    }

    #[test]
    fn full_occlusion_replaces_target_pixels() {
        let mut spec = easy(10);
        spec.events.push(SynthEvent::Occlusion {
            start: 3,
            end: 5,
            occluder: BoundingBox::new(46.0, 53.0, 40.0, 40.0).unwrap(),
            velocity: (2.0, 1.0),
            texture: OccluderTexture::Flat,
        });
        let seq = generate_synthetic(&spec, 0).unwrap();
        let gray = (0.5f64 * 255.0).round() / 255.0;
        for t in 3..=5 {
            let b = seq.ground_truth.as_ref().unwrap()[t];
            let f = &seq.frames[t];
            for y in b.top() as usize..b.bottom() as usize {
                for x in b.left() as usize..b.right() as usize {
                    assert_eq!(f.get(x, y, 0), gray);
                }
            }
        }
        let b = seq.ground_truth.as_ref().unwrap()[2];
        let f = &seq.frames[2];
        assert!((b.top() as usize..b.bottom() as usize).any(|y| f.get(b.cx as usize, y, 0) != gray));
    }

    // Blurring along the motion direction removes gradient energy along that axis.
    #[test]
    fn blur_reduces_along_motion_gradient_energy() {
        let spec = easy(8);
        let mut blurred = spec.clone();
        blurred.events.push(SynthEvent::Blur {
            start: 2,
            end: 4,
            length: 7,
        });
        let sharp = generate_synthetic(&spec, 5).unwrap();
        let soft = generate_synthetic(&blurred, 5).unwrap();
        let dir = (2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt());
        let energy = |img: &ImageRaster, d: (f64, f64)| -> f64 {
            let mut e = 0.0;
            for y in 2..img.height() - 2 {
                for x in 2..img.width() - 2 {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let g = img.sample(px + d.0, py + d.1) - img.sample(px - d.0, py - d.1);
                    e += g * g;
                }
            }
            e
        };
        for t in 2..=4 {
            let diff: f64 = sharp.frames[t]
                .values()
                .iter()
                .zip(soft.frames[t].values())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            assert!(diff > 0.0);
            let ratio_along = energy(&soft.frames[t], dir) / energy(&sharp.frames[t], dir);
            let ratio_across = energy(&soft.frames[t], (-dir.1, dir.0))
                / energy(&sharp.frames[t], (-dir.1, dir.0));
            assert!(
                ratio_along < 1.0 && ratio_along < ratio_across,
                "{ratio_along} {ratio_across}"
            );
        }
        assert_eq!(sharp.frames[1], soft.frames[1]);
    }

    #[test]
    fn spec_text_round_trip() {
        let mut spec = easy(40);
        spec.noise_sigma = 0.5;
        spec.events = vec![
            SynthEvent::Occlusion {
                start: 5,
                end: 15,
                occluder: BoundingBox::new(10.0, 20.0, 8.0, 30.0).unwrap(),
                velocity: (1.5, 0.0),
                texture: OccluderTexture::Target,
            },
            SynthEvent::Blur {
                start: 20,
                end: 25,
                length: 5,
            },
            SynthEvent::Clutter { count: 3 },
            SynthEvent::Occlusion {
                start: 30,
                end: 32,
                occluder: BoundingBox::new(30.0, 30.0, 6.0, 12.0).unwrap(),
                velocity: (0.0, -1.0),
                texture: OccluderTexture::Pattern(42),
            },
        ];
        assert_eq!(SynthSpec::parse(&spec.to_text()).unwrap(), spec);
        assert_eq!(spec.attributes(), vec!["occlusion", "blur", "clutter"]);
        let seq = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(seq.frames.len(), 40);
    }

    #[test]
    fn spec_validation_errors() {
        let bad_range =
            "frames=10\nwaypoint=0,20,20\n[event]\ntype=blur\nstart=5\nend=12\nlength=3\n";
        assert!(matches!(
            SynthSpec::parse(bad_range),
            Err(Error::InvalidSpec(_))
        ));
        let outside = "frames=10\nwidth=50\nheight=50\nwaypoint=0,80,20\n";
        assert!(matches!(
            SynthSpec::parse(outside),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            SynthSpec::parse("frames=10\nwaypoint=0,20,20\ncolour=red\n"),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            SynthSpec::parse("frames=10\n"),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn overlay_clips_at_frame_edge() {
        let frame = ImageRaster::filled(10, 8, 1, 0.3).unwrap();
        let out = draw_box(&frame, &BoundingBox::new(1.0, 1.0, 6.0, 6.0).unwrap());
        assert_eq!((out.width(), out.height(), out.channels()), (10, 8, 3));
        // box spans pixels -2..=3; the right and bottom edges are columns/rows 2 and 3
        assert_eq!(out.get(3, 0, 0), 1.0);
        assert_eq!(out.get(3, 0, 1), 0.0);
        assert_eq!(out.get(0, 3, 0), 1.0);
        assert_eq!(out.get(1, 1, 1), 0.3);
        assert_eq!(out.get(5, 5, 0), 0.3);
    }

    #[test]
    fn results_round_trip_to_three_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            ResultRow {
                frame: 1,
                bbox: BoundingBox::new(10.12345, 20.5, 8.0, 9.9996).unwrap(),
                quality_flag: false,
            },
            ResultRow {
                frame: 2,
                bbox: BoundingBox::new(11.0, 21.0001, 8.25, 10.0).unwrap(),
                quality_flag: true,
            },
        ];
        let p = dir.path().join("r.csv");
        fs::write(&p, format_results(&rows)).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        let back = load_results(&p).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.frame, b.frame);
            assert_eq!(a.quality_flag, b.quality_flag);
            for (x, y) in a.bbox.as_array().iter().zip(b.bbox.as_array()) {
                assert!((x - y).abs() <= 5e-4 + 1e-12);
            }
        }
    }

    #[test]
    fn sequence_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = easy(4);
        spec.noise_sigma = 0.7;
        let seq = generate_synthetic(&spec, 9).unwrap();
        let path = dir.path().join("seq");
        save_sequence(&path, &seq).unwrap();
        let back = load_sequence(&path).unwrap();
        assert_eq!(back.frames, seq.frames);
        assert_eq!(back.name, "seq");
        assert_eq!(back.attributes, vec!["easy"]);
        for (a, b) in back
            .ground_truth
            .unwrap()
            .iter()
            .zip(seq.ground_truth.unwrap())
        {
            for (x, y) in a.as_array().iter().zip(b.as_array()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn loader_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::MissingFile(_))
        ));
        let seq = generate_synthetic(&easy(3), 1).unwrap();
        save_sequence(dir.path(), &seq).unwrap();
        fs::write(dir.path().join(GROUND_TRUTH_FILE), "0,0,10,10\n0,0,10,10\n").unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::CountMismatch(_))
        ));
        fs::remove_file(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn three_frames_center_converted() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("img")).unwrap();
        for i in 1..=3 {
            write_pnm(
                &dir.path().join(format!("img/{i:04}.pgm")),
                &ImageRaster::filled(16, 16, 1, 0.5).unwrap(),
            )
            .unwrap();
        }
        fs::write(
            dir.path().join(GROUND_TRUTH_FILE),
            "0,0,10,10\n0,0,10,10\n0,0,10,10\n",
        )
        .unwrap();
        let seq = load_sequence(dir.path()).unwrap();
        assert!(seq
            .ground_truth
            .unwrap()
            .iter()
            .all(|b| (b.cx, b.cy) == (5.0, 5.0)));
    }

    // Exhaustive template matching on a zero-noise, event-free frame recovers the
    // recorded top-left corner.
    #[test]
    fn template_match_recovers_ground_truth() {
        let spec = easy(12);
        let seq = generate_synthetic(&spec, 2).unwrap();
        let gt = seq.ground_truth.as_ref().unwrap();
        let b0 = gt[0];
        let (x0, y0) = (b0.left() as usize, b0.top() as usize);
        let template: Vec<f64> = (0..24)
            .flat_map(|y| (0..24).map(move |x| (x, y)))
            .map(|(x, y)| seq.frames[0].get(x0 + x, y0 + y, 0))
            .collect();
        for t in [3, 7, 11] {
            let f = &seq.frames[t];
            let mut best = (f64::INFINITY, 0, 0);
            for y in 0..=f.height() - 24 {
                for x in 0..=f.width() - 24 {
                    let mut ssd = 0.0;
                    for (i, tv) in template.iter().enumerate() {
                        ssd += (f.get(x + i % 24, y + i / 24, 0) - tv).powi(2);
                    }
                    if ssd < best.0 {
                        best = (ssd, x, y);
                    }
                }
            }
            assert_eq!((best.1 as f64, best.2 as f64), (gt[t].left(), gt[t].top()));
        }
    }
}
