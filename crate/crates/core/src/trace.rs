//! Pointer sample storage, per-note slicing and overlay reconstruction.

use std::fmt::Write as _;
use std::io::Cursor;

use image::{ImageFormat, Rgba, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::model::{Millis, PointerSample, PointerTrace, Utterance, TRACE_MARGIN_MS};

/// Width of one downsampling bucket. One sample survives per bucket (20 Hz).
pub const BUCKET_MS: Millis = 50;

/// Marker radius in canvas units.
pub const MARKER_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Appended,
    /// Replaced the previous sample of the same bucket.
    Replaced,
    DroppedLate,
}

/// Append-only pointer history for one session.
#[derive(Debug, Clone)]
pub struct TraceStore {
    samples: Vec<PointerSample>,
    late_dropped: u64,
    bucket_ms: Millis,
}

impl Default for TraceStore {
    fn default() -> Self {
        Self::new(BUCKET_MS)
    }
}

impl TraceStore {
    pub fn new(bucket_ms: Millis) -> Self {
        Self { samples: Vec::new(), late_dropped: 0, bucket_ms: bucket_ms.max(1) }
    }

    pub fn record_sample(&mut self, sample: PointerSample) -> RecordOutcome {
        let Some(last) = self.samples.last_mut() else {
            self.samples.push(sample);
            return RecordOutcome::Appended;
        };
        if sample.t < last.t {
            self.late_dropped += 1;
            return RecordOutcome::DroppedLate;
        }
        if sample.t / self.bucket_ms == last.t / self.bucket_ms {
            *last = sample;
            RecordOutcome::Replaced
        } else {
            self.samples.push(sample);
            RecordOutcome::Appended
        }
    }

    pub fn late_dropped(&self) -> u64 {
        self.late_dropped
    }

    pub fn samples(&self) -> &[PointerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples with `t` in the closed interval `[t0 - 500, t1 + 500]`.
    pub fn slice(&self, t0: Millis, t1: Millis) -> PointerTrace {
        let (lo, hi) = margin_window(t0, t1);
        let start = self.samples.partition_point(|s| s.t < lo);
        let end = self.samples.partition_point(|s| s.t <= hi);
        PointerTrace { samples: self.samples[start..end.max(start)].to_vec() }
    }

    /// Last sample strictly before the margin-extended window starting at `t0`.
    pub fn last_before(&self, t0: Millis) -> Option<PointerSample> {
        let lo = t0.saturating_sub(TRACE_MARGIN_MS);
        let idx = self.samples.partition_point(|s| s.t < lo);
        idx.checked_sub(1).map(|i| self.samples[i])
    }
}

pub fn margin_window(t0: Millis, t1: Millis) -> (Millis, Millis) {
    (t0.saturating_sub(TRACE_MARGIN_MS), t1.saturating_add(TRACE_MARGIN_MS))
}

/// Point produced by [`dwell_centroid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
}

/// Dwell-weighted centroid: each sample is weighted by the time until the
/// next sample, the last one by the time until `end`. Falls back to the plain
/// mean when every weight is zero.
pub fn dwell_centroid(samples: &[PointerSample], end: Millis) -> Option<Centroid> {
    if samples.is_empty() {
        return None;
    }
    let weights: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let until = samples.get(i + 1).map_or(end, |n| n.t);
            until.saturating_sub(s.t) as f64
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let weights = if total > 0.0 { weights } else { vec![1.0; samples.len()] };
    let total: f64 = weights.iter().sum();

    let x = samples.iter().zip(&weights).map(|(s, w)| s.x * w).sum::<f64>() / total;
    let y = samples.iter().zip(&weights).map(|(s, w)| s.y * w).sum::<f64>() / total;
    let (zw, zs) = samples
        .iter()
        .zip(&weights)
        .filter_map(|(s, w)| s.z.map(|z| (*w, z * w)))
        .fold((0.0, 0.0), |(aw, az), (w, z)| (aw + w, az + z));
    let z = if samples.iter().any(|s| s.z.is_some()) {
        if zw > 0.0 {
            Some(zs / zw)
        } else {
            let zs: Vec<f64> = samples.iter().filter_map(|s| s.z).collect();
            Some(zs.iter().sum::<f64>() / zs.len() as f64)
        }
    } else {
        None
    };
    Some(Centroid { x, y, z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    /// 1-based index of the utterance this marker belongs to.
    pub label: usize,
}

/// Markers plus a textual timeline, the input for visual element linking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayDescriptor {
    pub markers: Vec<Marker>,
    pub timeline: String,
}

/// Builds one marker per utterance that has pointer samples in its
/// sub-window. Utterance `i` owns samples from its start up to the start of
/// utterance `i + 1`; the first also owns the leading margin and the last the
/// trailing one.
pub fn render_overlay(trace: &PointerTrace, utterances: &[Utterance]) -> OverlayDescriptor {
    let mut markers = Vec::new();
    let mut timeline = String::new();
    for (i, u) in utterances.iter().enumerate() {
        let lo = if i == 0 { Millis::MIN } else { u.t_start };
        let next = utterances.get(i + 1).map(|n| n.t_start);
        let hi = next.unwrap_or(Millis::MAX);
        let own: Vec<PointerSample> = trace.samples.iter().filter(|s| s.t >= lo && s.t < hi).copied().collect();
        let dwell_end = next.unwrap_or(u.t_end.saturating_add(TRACE_MARGIN_MS));
        let centroid = dwell_centroid(&own, dwell_end);
        let _ = write!(timeline, "[{}] {}-{} ms: \"{}\"", i + 1, u.t_start, u.t_end, u.text);
        match centroid {
            Some(c) => {
                let _ = writeln!(timeline, " pointer ({:.1}, {:.1})", c.x, c.y);
                markers.push(Marker { x: c.x, y: c.y, radius: MARKER_RADIUS, label: i + 1 });
            }
            None => {
                let _ = writeln!(timeline, " pointer (none)");
            }
        }
    }
    if !trace.is_empty() {
        timeline.push_str("samples:");
        for s in &trace.samples {
            let _ = write!(timeline, " {}@({:.1},{:.1})", s.t, s.x, s.y);
        }
        timeline.push('\n');
    }
    OverlayDescriptor { markers, timeline }
}

/// Composites the markers onto a copy of `snapshot`. Canvas coordinates are
/// scaled to the snapshot size.
pub fn rasterize(overlay: &OverlayDescriptor, snapshot: &RgbaImage, canvas: (f64, f64)) -> RgbaImage {
    let mut out = snapshot.clone();
    let (w, h) = out.dimensions();
    if w == 0 || h == 0 || canvas.0 <= 0.0 || canvas.1 <= 0.0 {
        return out;
    }
    let sx = w as f64 / canvas.0;
    let sy = h as f64 / canvas.1;
    let green = Rgba([40, 200, 80, 255]);
    for m in &overlay.markers {
        let cx = m.x * sx;
        let cy = m.y * sy;
        let r = m.radius * sx.max(sy);
        let x0 = (cx - r).floor().max(0.0) as u32;
        let y0 = (cy - r).floor().max(0.0) as u32;
        let x1 = ((cx + r).ceil() as i64).clamp(0, w as i64 - 1) as u32;
        let y1 = ((cy + r).ceil() as i64).clamp(0, h as i64 - 1) as u32;
        for py in y0..=y1.min(h - 1) {
            for px in x0..=x1.min(w - 1) {
                let dx = px as f64 + 0.5 - cx;
                let dy = py as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    out.put_pixel(px, py, green);
                }
            }
        }
    }
    out
}

pub fn encode_png(img: &RgbaImage) -> Result<Vec<u8>, image::ImageError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}
