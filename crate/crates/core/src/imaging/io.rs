//! Frame files: PNG or binary PPM (P6), one file per frame.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use super::Frame;
use crate::error::{Error, Result};

const FRAME_EXTENSIONS: [&str; 3] = ["png", "ppm", "pnm"];

fn is_frame_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false)
}

/// Frame files of a directory in lexicographic file-name order; the
/// position in this list is the frame index.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if is_frame_file(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no PNG/PPM frames in directory"),
        ));
    }
    Ok(files)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| p.0).collect();
    Frame::new(w as usize, h as usize, pixels)
}

pub fn read_frames_dir(dir: &Path) -> Result<Vec<Frame>> {
    list_frames(dir)?.iter().map(|p| read_frame(p)).collect()
}

/// Writes a frame; the format follows the extension (`.png`, `.ppm`).
pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") | Some("pnm") => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    };
    let mut buf = Vec::with_capacity(frame.pixels().len() * 3);
    for p in frame.pixels() {
        buf.extend_from_slice(p);
    }
    let img =
        RgbImage::from_raw(frame.width() as u32, frame.height() as u32, buf).expect("buffer length matches frame dims");
    img.save_with_format(path, format).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
