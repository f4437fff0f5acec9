//! On-disk artifacts: binary graymaps, CSV traces and key=value summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::epidemic::Status;
use crate::error::{Error, Result};
use crate::sim::World;

/// 8-bit grayscale raster, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count must match dimensions");
        Self {
            width,
            height,
            pixels,
        }
    }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Parses the exact layout written by [`encode_pgm`].
pub fn decode_pgm(bytes: &[u8]) -> Option<GrayImage> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let width: usize = fields[1].parse().ok()?;
    let height: usize = fields[2].parse().ok()?;
    let pixels = bytes.get(pos..)?;
    (pixels.len() == width * height).then(|| GrayImage::new(width, height, pixels.to_vec()))
}

pub fn write_heatmap(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_heatmap(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).ok_or_else(|| Error::Config(format!("{} is not a binary graymap", path.display())))
}

pub const TRACE_HEADER: [&str; 11] = [
    "tick",
    "time_s",
    "robot_id",
    "x_mm",
    "y_mm",
    "heading_rad",
    "mode",
    "field_value",
    "epidemic_status",
    "cluster_degree",
    "noise_count",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub tick: u64,
    pub time_s: f64,
    pub robot_id: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    pub heading_rad: f64,
    pub mode: &'static str,
    pub field_value: u16,
    pub epidemic_status: &'static str,
    pub cluster_degree: usize,
    pub noise_count: u32,
}

pub fn trace_rows(world: &World) -> impl Iterator<Item = TraceRow> + '_ {
    let time_s = world.time_s();
    world.robots.iter().map(move |r| TraceRow {
        tick: world.tick,
        time_s,
        robot_id: r.id,
        x_mm: r.position.x,
        y_mm: r.position.y,
        heading_rad: r.heading,
        mode: r.mode.as_str(),
        field_value: r.field.current_value,
        epidemic_status: match r.epidemic.status {
            Status::Susceptible => "susceptible",
            Status::Infected { .. } => "infected",
        },
        cluster_degree: r.epidemic.cluster_degree,
        noise_count: world.deliveries[r.id].stats.noise_count,
    })
}

pub fn write_trace(rows: &[TraceRow], path: &Path) -> Result<()> {
    let to_err = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(to_err)?;
    w.write_record(TRACE_HEADER).map_err(to_err)?;
    for row in rows {
        w.serialize(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_opt(&mut self, key: &str, value: Option<f64>) {
        match value {
            Some(v) => self.push(key, format!("{v:.6}")),
            None => self.push(key, "NA"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_layout() {
        let img = GrayImage::new(2, 2, vec![0, 255, 128, 64]);
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 255, 128, 64]);
        assert_eq!(bytes.len(), 15);
        assert_eq!(decode_pgm(&bytes), Some(img));
    }

    #[test]
    fn all_black_image() {
        let img = GrayImage::new(3, 1, vec![0; 3]);
        let bytes = encode_pgm(&img);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels, vec![0, 0, 0]);
    }

    #[test]
    fn rejects_truncated_raster() {
        let mut bytes = encode_pgm(&GrayImage::new(2, 2, vec![1, 2, 3, 4]));
        bytes.pop();
        assert!(decode_pgm(&bytes).is_none());
        assert!(decode_pgm(b"P2\n1 1\n255\n\x00").is_none());
    }

    #[test]
    fn whitespace_pixel_after_header_survives() {
        let img = GrayImage::new(2, 1, vec![b'\n', b' ']);
        assert_eq!(decode_pgm(&encode_pgm(&img)), Some(img));
    }

    #[test]
    fn summary_renders_in_order() {
        let mut s = Summary::default();
        s.push("b", 2);
        s.push("a", "x");
        s.push_opt("c", None);
        assert_eq!(s.render(), "b=2\na=x\nc=NA\n");
        assert_eq!(s.get("a"), Some("x"));
    }
}
