//! Frame sequence and raw video IO.
//!
//! Two lossless containers are supported:
//!
//! * a directory of PNG frames (8 or 16 bit, grayscale or RGB, alpha
//!   ignored) read in file-name order and written as `frame_00000.png`, ...;
//! * a single `.jmv` raw file: a 32-byte little-endian header followed by
//!   planar row-major luma samples.
//!
//! | offset | size | field                                    |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `JMVRAW\0\x01`                      |
//! | 8      | 4    | width (u32)                              |
//! | 12     | 4    | height (u32)                             |
//! | 16     | 4    | frame count (u32)                        |
//! | 20     | 8    | frames per second (f64)                  |
//! | 28     | 1    | sample format: 1 = u8, 2 = u16, 3 = f32  |
//! | 29     | 3    | zero                                     |
//!
//! RGB input is processed as BT.601 luma; chroma is carried through
//! unchanged when writing PNG output. Intensities are normalized to
//! `[0, 1]` on read and quantized only on write. Writes go to a hidden
//! sibling path that is renamed into place once complete.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use jerkmag_core::{ClipError, Frame, VideoClip};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("input not found: {0}")]
    NotFound(PathBuf),
    #[error("no PNG frames in {0}")]
    NoFrames(PathBuf),
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("frame {path} is {width}x{height}, expected {expected_width}x{expected_height}")]
    MixedSizes { path: PathBuf, width: u32, height: u32, expected_width: u32, expected_height: u32 },
    #[error("frame {path} mixes color and grayscale or bit depths with earlier frames")]
    MixedFormats { path: PathBuf },
    #[error("malformed raw video {path}: {reason}")]
    BadRaw { path: PathBuf, reason: String },
    #[error("output already exists: {0}")]
    OutputExists(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Clip(#[from] ClipError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawSample {
    U8,
    U16,
    F32,
}

impl RawSample {
    fn code(self) -> u8 {
        match self {
            RawSample::U8 => 1,
            RawSample::U16 => 2,
            RawSample::F32 => 3,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(RawSample::U8),
            2 => Some(RawSample::U16),
            3 => Some(RawSample::F32),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            RawSample::U8 => 1,
            RawSample::U16 => 2,
            RawSample::F32 => 4,
        }
    }
}

/// Storage format of a sequence on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Container {
    Png(BitDepth),
    Raw(RawSample),
}

/// BT.601 colour-difference planes, one pair per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Chroma {
    pub cb: Vec<Vec<f64>>,
    pub cr: Vec<Vec<f64>>,
}

/// A decoded sequence: luma clip plus optional chroma.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub clip: VideoClip,
    pub chroma: Option<Chroma>,
    pub container: Container,
}

pub const RAW_EXTENSION: &str = "jmv";
const RAW_MAGIC: &[u8; 8] = b"JMVRAW\x00\x01";
const RAW_HEADER: usize = 32;

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

fn to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = KR * r + KG * g + KB * b;
    (y, (b - y) / (2.0 * (1.0 - KB)), (r - y) / (2.0 * (1.0 - KR)))
}

fn to_rgb(y: f64, cb: f64, cr: f64) -> (f64, f64, f64) {
    let r = y + 2.0 * (1.0 - KR) * cr;
    let b = y + 2.0 * (1.0 - KB) * cb;
    (r, (y - KR * r - KB * b) / KG, b)
}

pub fn is_raw_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(RAW_EXTENSION))
}

/// Reads a PNG directory (at `fps`) or a `.jmv` file (frame rate from its header).
pub fn read_sequence(path: &Path, fps: f64) -> Result<Sequence, IoError> {
    if !path.exists() {
        return Err(IoError::NotFound(path.to_path_buf()));
    }
    if is_raw_path(path) {
        read_raw(path)
    } else {
        read_png_dir(path, fps)
    }
}

/// PNG files directly inside `dir`, sorted by name.
pub fn png_frames(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

enum Decoded {
    Gray(Vec<f64>),
    Color(Vec<f64>, Vec<f64>, Vec<f64>),
}

fn decode_png(path: &Path) -> Result<(u32, u32, BitDepth, Decoded), IoError> {
    let image = image::open(path).map_err(|e| IoError::Decode { path: path.to_path_buf(), message: e.to_string() })?;
    let (w, h) = (image.width(), image.height());
    let gray = |data: Vec<f64>, depth| Ok((w, h, depth, Decoded::Gray(data)));
    let split = |rgb: Vec<[f64; 3]>, depth| {
        let mut planes = (Vec::with_capacity(rgb.len()), Vec::with_capacity(rgb.len()), Vec::with_capacity(rgb.len()));
        for [r, g, b] in rgb {
            let (y, cb, cr) = to_ycbcr(r, g, b);
            planes.0.push(y);
            planes.1.push(cb);
            planes.2.push(cr);
        }
        Ok((w, h, depth, Decoded::Color(planes.0, planes.1, planes.2)))
    };
    match image {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            gray(image.to_luma8().pixels().map(|p| p.0[0] as f64 / 255.0).collect(), BitDepth::Eight)
        }
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            gray(image.to_luma16().pixels().map(|p| p.0[0] as f64 / 65535.0).collect(), BitDepth::Sixteen)
        }
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => split(
            image.to_rgb8().pixels().map(|p| p.0.map(|c| c as f64 / 255.0)).collect(),
            BitDepth::Eight,
        ),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => split(
            image.to_rgb16().pixels().map(|p| p.0.map(|c| c as f64 / 65535.0)).collect(),
            BitDepth::Sixteen,
        ),
        other => Err(IoError::Decode {
            path: path.to_path_buf(),
            message: format!("unsupported color type {:?}", other.color()),
        }),
    }
}

fn read_png_dir(dir: &Path, fps: f64) -> Result<Sequence, IoError> {
    let files = png_frames(dir)?;
    if files.is_empty() {
        return Err(IoError::NoFrames(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut chroma: Option<Chroma> = None;
    let mut first: Option<(u32, u32, BitDepth, bool)> = None;
    for path in &files {
        let (w, h, depth, decoded) = decode_png(path)?;
        let color = matches!(decoded, Decoded::Color(..));
        match first {
            None => first = Some((w, h, depth, color)),
            Some((fw, fh, fd, fc)) => {
                if (w, h) != (fw, fh) {
                    return Err(IoError::MixedSizes {
                        path: path.clone(),
                        width: w,
                        height: h,
                        expected_width: fw,
                        expected_height: fh,
                    });
                }
                if depth != fd || color != fc {
                    return Err(IoError::MixedFormats { path: path.clone() });
                }
            }
        }
        let luma = match decoded {
            Decoded::Gray(y) => y,
            Decoded::Color(y, cb, cr) => {
                let planes = chroma.get_or_insert_with(|| Chroma { cb: Vec::new(), cr: Vec::new() });
                planes.cb.push(cb);
                planes.cr.push(cr);
                y
            }
        };
        frames.push(Frame::new(w as usize, h as usize, luma)?);
    }
    let depth = first.map(|f| f.2).unwrap_or(BitDepth::Eight);
    Ok(Sequence { clip: VideoClip::new(frames, fps)?, chroma, container: Container::Png(depth) })
}

fn read_raw(path: &Path) -> Result<Sequence, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |reason: &str| IoError::BadRaw { path: path.to_path_buf(), reason: reason.to_string() };
    if bytes.len() < RAW_HEADER || &bytes[..8] != RAW_MAGIC {
        return Err(bad("missing header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (w, h, n) = (u32_at(8), u32_at(12), u32_at(16));
    let fps = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let sample = RawSample::from_code(bytes[28]).ok_or_else(|| bad("unknown sample format"))?;
    let body = &bytes[RAW_HEADER..];
    let expected = w.checked_mul(h).and_then(|p| p.checked_mul(n)).and_then(|s| s.checked_mul(sample.bytes()));
    if expected != Some(body.len()) {
        return Err(bad("payload size does not match header"));
    }
    if n == 0 {
        return Err(bad("no frames"));
    }
    let values: Vec<f64> = match sample {
        RawSample::U8 => body.iter().map(|&b| b as f64 / 255.0).collect(),
        RawSample::U16 => body.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f64 / 65535.0).collect(),
        RawSample::F32 => body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
    };
    let frames = values.chunks_exact(w * h).map(|c| Frame::new(w, h, c.to_vec())).collect::<Result<Vec<_>, _>>()?;
    let clip = VideoClip::new(frames, fps).map_err(|_| bad("invalid frame rate"))?;
    Ok(Sequence { clip, chroma: None, container: Container::Raw(sample) })
}

fn quantize(v: f64, depth: BitDepth) -> u16 {
    (v.clamp(0.0, 1.0) * depth.max()).round() as u16
}

/// Zero-padded frame file name for index `i` of `count`.
pub fn frame_name(i: usize, count: usize) -> String {
    let digits = count.saturating_sub(1).to_string().len().max(5);
    format!("frame_{i:0digits$}.png")
}

/// Encodes one frame (with optional chroma planes) as PNG bytes.
pub fn encode_png(frame: &Frame, chroma: Option<(&[f64], &[f64])>, depth: BitDepth) -> Result<Vec<u8>, String> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let image = match (chroma, depth) {
        (None, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, frame.data().iter().map(|&v| quantize(v, depth) as u8).collect())
                .ok_or("buffer size")?,
        ),
        (None, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, frame.data().iter().map(|&v| quantize(v, depth)).collect())
                .ok_or("buffer size")?,
        ),
        (Some((cb, cr)), _) => {
            let mut samples = Vec::with_capacity(frame.len() * 3);
            for ((&y, &cb), &cr) in frame.data().iter().zip(cb).zip(cr) {
                let (r, g, b) = to_rgb(y, cb, cr);
                samples.extend([quantize(r, depth), quantize(g, depth), quantize(b, depth)]);
            }
            match depth {
                BitDepth::Eight => DynamicImage::ImageRgb8(
                    ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, samples.into_iter().map(|v| v as u8).collect())
                        .ok_or("buffer size")?,
                ),
                BitDepth::Sixteen => DynamicImage::ImageRgb16(
                    ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, samples).ok_or("buffer size")?,
                ),
            }
        }
    };
    let mut out = Vec::new();
    image.write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png).map_err(|e| e.to_string())?;
    Ok(out)
}

fn raw_bytes(clip: &VideoClip, sample: RawSample) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER + clip.len() * clip.width() * clip.height() * sample.bytes());
    out.extend_from_slice(RAW_MAGIC);
    for v in [clip.width(), clip.height(), clip.len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&clip.fps().to_le_bytes());
    out.extend_from_slice(&[sample.code(), 0, 0, 0]);
    for frame in clip.frames() {
        for &v in frame.data() {
            match sample {
                RawSample::U8 => out.push(quantize(v, BitDepth::Eight) as u8),
                RawSample::U16 => out.extend_from_slice(&quantize(v, BitDepth::Sixteen).to_le_bytes()),
                RawSample::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            }
        }
    }
    out
}

/// Hidden sibling used while an output is being written.
fn staging_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial"))
}

fn ensure_absent(path: &Path) -> Result<(), IoError> {
    if path.exists() {
        return Err(IoError::OutputExists(path.to_path_buf()));
    }
    Ok(())
}

/// Writes `bytes` to `path` through a staging file; refuses to overwrite.
pub fn write_file_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    ensure_absent(path)?;
    let staging = staging_path(path);
    let result = (|| {
        let mut file = fs::File::create(&staging).map_err(io_err(&staging))?;
        file.write_all(bytes).map_err(io_err(&staging))?;
        file.sync_all().map_err(io_err(&staging))?;
        fs::rename(&staging, path).map_err(io_err(path))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&staging);
    }
    result
}

/// Writes a sequence in `container`; PNG output goes to a new directory.
pub fn write_sequence(
    path: &Path,
    clip: &VideoClip,
    chroma: Option<&Chroma>,
    container: Container,
) -> Result<(), IoError> {
    match container {
        Container::Raw(sample) => write_file_atomic(path, &raw_bytes(clip, sample)),
        Container::Png(depth) => {
            ensure_absent(path)?;
            let staging = staging_path(path);
            let result = (|| {
                if staging.exists() {
                    fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
                }
                fs::create_dir_all(&staging).map_err(io_err(&staging))?;
                for (i, frame) in clip.frames().iter().enumerate() {
                    let planes = chroma.map(|c| (c.cb[i].as_slice(), c.cr[i].as_slice()));
                    let file = staging.join(frame_name(i, clip.len()));
                    let bytes = encode_png(frame, planes, depth)
                        .map_err(|message| IoError::Decode { path: file.clone(), message })?;
                    fs::write(&file, bytes).map_err(io_err(&file))?;
                }
                fs::rename(&staging, path).map_err(io_err(path))
            })();
            if result.is_err() {
                let _ = fs::remove_dir_all(&staging);
            }
            result
        }
    }
}

/// Container for `path`: raw by extension (keeping `preferred` sample type
/// when it is raw), PNG otherwise (keeping `preferred` depth when PNG).
pub fn container_for(path: &Path, preferred: Container) -> Container {
    match (is_raw_path(path), preferred) {
        (true, Container::Raw(sample)) => Container::Raw(sample),
        (true, Container::Png(BitDepth::Eight)) => Container::Raw(RawSample::U8),
        (true, Container::Png(BitDepth::Sixteen)) => Container::Raw(RawSample::U16),
        (false, Container::Png(depth)) => Container::Png(depth),
        (false, Container::Raw(RawSample::U8)) => Container::Png(BitDepth::Eight),
        (false, Container::Raw(_)) => Container::Png(BitDepth::Sixteen),
    }
}

/// Writes a single grayscale image (slices, masks).
pub fn write_gray_png(path: &Path, frame: &Frame, depth: BitDepth) -> Result<(), IoError> {
    let bytes = encode_png(frame, None, depth).map_err(|message| IoError::Decode { path: path.to_path_buf(), message })?;
    write_file_atomic(path, &bytes)
}
