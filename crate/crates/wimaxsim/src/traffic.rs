//! Video traffic: frame-size traces, trace synthesis, the constant-rate
//! emission schedule and IP packetization.
//!
//! A trace is the unit of exchange: either parsed from a tab-separated file
//! or synthesized from gamma-distributed frame sizes. The simulator replays
//! traces frame by frame; nothing downstream cares where they came from.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{RandomStream, SimTime};

/// IP + UDP header bytes per packet; counted on the air, excluded from
/// goodput.
pub const PACKET_HEADER_BYTES: u32 = 40;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("trace has no frame records")]
    Empty,
    #[error("synthesis targets infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum FrameType {
    I,
    P,
    B,
}

impl FrameType {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameType::I => "I",
            FrameType::P => "P",
            FrameType::B => "B",
        }
    }

    fn parse(s: &str) -> Option<FrameType> {
        match s {
            "I" | "i" => Some(FrameType::I),
            "P" | "p" => Some(FrameType::P),
            "B" | "b" => Some(FrameType::B),
            _ => None,
        }
    }
}

/// Source codec of a trace. Unknown labels are carried verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Codec {
    H264Avc,
    H264Svc,
    Other(String),
}

impl Codec {
    pub fn label(&self) -> &str {
        match self {
            Codec::H264Avc => "H264-AVC",
            Codec::H264Svc => "H264-SVC",
            Codec::Other(s) => s,
        }
    }

    /// Long-run mean PSNR associated with the codec's reference encoding,
    /// used when a trace carries no PSNR of its own.
    pub fn default_mean_psnr_db(&self) -> Option<f64> {
        match self {
            Codec::H264Avc => Some(46.49),
            Codec::H264Svc => Some(47.89),
            Codec::Other(_) => None,
        }
    }
}

impl From<String> for Codec {
    fn from(s: String) -> Codec {
        match s.as_str() {
            "H264-AVC" => Codec::H264Avc,
            "H264-SVC" => Codec::H264Svc,
            _ => Codec::Other(s),
        }
    }
}

impl From<Codec> for String {
    fn from(c: Codec) -> String {
        c.label().to_string()
    }
}

impl std::fmt::Display for Codec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoTraceRecord {
    pub index: u32,
    pub frame_type: FrameType,
    pub size_bytes: u32,
    pub psnr_db: Option<f64>,
}

/// A frame-size trace plus its header metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoTrace {
    pub codec: Codec,
    pub fps: f64,
    pub gop_size: u32,
    pub records: Vec<VideoTraceRecord>,
    /// Mean of the per-frame PSNR column when present, otherwise the value
    /// of a `# mean_psnr=` header, otherwise the codec default.
    pub mean_psnr_db: Option<f64>,
    /// Opaque pass-through metadata.
    pub compression_ratio: Option<f64>,
    pub resolution: Option<String>,
}

impl VideoTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses the tab-separated trace format:
    ///
    /// ```text
    /// # codec=H264-SVC
    /// # fps=30
    /// # gop=16
    /// 0<TAB>I<TAB>12345<TAB>47.2
    /// 1<TAB>P<TAB>2345<TAB>46.9
    /// ```
    ///
    /// The PSNR column is optional but must be consistent across rows.
    /// Recognized `#` headers are `codec`, `fps`, `gop`, `mean_psnr`,
    /// `compression_ratio` and `resolution`; other comment lines are
    /// skipped.
    pub fn parse(text: &str) -> Result<VideoTrace, TraceError> {
        let mut codec: Option<Codec> = None;
        let mut fps = 30.0f64;
        let mut gop_size = 16u32;
        let mut header_psnr: Option<f64> = None;
        let mut compression_ratio: Option<f64> = None;
        let mut resolution: Option<String> = None;
        let mut records: Vec<VideoTraceRecord> = Vec::new();
        let mut has_psnr_column: Option<bool> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some((key, value)) = comment.split_once('=') {
                    let (key, value) = (key.trim(), value.trim());
                    let num = |what: &str| {
                        value.parse::<f64>().map_err(|_| TraceError::Parse {
                            line: line_no,
                            msg: format!("{what} header is not a number: {value:?}"),
                        })
                    };
                    match key {
                        "codec" => codec = Some(Codec::from(value.to_string())),
                        "fps" => {
                            fps = num("fps")?;
                            if !(fps > 0.0 && fps.is_finite()) {
                                return Err(TraceError::Parse {
                                    line: line_no,
                                    msg: format!("fps must be > 0, got {value}"),
                                });
                            }
                        }
                        "gop" => {
                            gop_size = value.parse().map_err(|_| TraceError::Parse {
                                line: line_no,
                                msg: format!("gop header is not an integer: {value:?}"),
                            })?;
                            if gop_size == 0 {
                                return Err(TraceError::Parse {
                                    line: line_no,
                                    msg: "gop must be >= 1".into(),
                                });
                            }
                        }
                        "mean_psnr" => header_psnr = Some(num("mean_psnr")?),
                        "compression_ratio" => compression_ratio = Some(num("compression_ratio")?),
                        "resolution" => resolution = Some(value.to_string()),
                        _ => {} // unknown headers are tolerated
                    }
                }
                continue;
            }

            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 && cols.len() != 4 {
                return Err(TraceError::Parse {
                    line: line_no,
                    msg: format!("expected 3 or 4 tab-separated columns, found {}", cols.len()),
                });
            }
            let with_psnr = cols.len() == 4;
            match has_psnr_column {
                None => has_psnr_column = Some(with_psnr),
                Some(prev) if prev != with_psnr => {
                    return Err(TraceError::Parse {
                        line: line_no,
                        msg: "PSNR column must be present on all rows or none".into(),
                    });
                }
                _ => {}
            }
            let index: u32 = cols[0].trim().parse().map_err(|_| TraceError::Parse {
                line: line_no,
                msg: format!("frame index is not an integer: {:?}", cols[0]),
            })?;
            if index as usize != records.len() {
                return Err(TraceError::Parse {
                    line: line_no,
                    msg: format!("frame index {} out of order, expected {}", index, records.len()),
                });
            }
            let frame_type = FrameType::parse(cols[1].trim()).ok_or(TraceError::Parse {
                line: line_no,
                msg: format!("unknown frame type {:?}", cols[1]),
            })?;
            let size_bytes: u32 = cols[2].trim().parse().map_err(|_| TraceError::Parse {
                line: line_no,
                msg: format!("frame size is not an integer: {:?}", cols[2]),
            })?;
            if size_bytes == 0 {
                return Err(TraceError::Parse {
                    line: line_no,
                    msg: "frame size must be >= 1 byte".into(),
                });
            }
            let psnr_db = if with_psnr {
                Some(cols[3].trim().parse::<f64>().map_err(|_| TraceError::Parse {
                    line: line_no,
                    msg: format!("PSNR is not a number: {:?}", cols[3]),
                })?)
            } else {
                None
            };
            records.push(VideoTraceRecord {
                index,
                frame_type,
                size_bytes,
                psnr_db,
            });
        }

        if records.is_empty() {
            return Err(TraceError::Empty);
        }
        let codec = codec.unwrap_or(Codec::Other("unknown".to_string()));
        let mean_psnr_db = if has_psnr_column == Some(true) {
            let sum: f64 = records.iter().map(|r| r.psnr_db.unwrap()).sum();
            Some(sum / records.len() as f64)
        } else {
            header_psnr.or_else(|| codec.default_mean_psnr_db())
        };
        Ok(VideoTrace {
            codec,
            fps,
            gop_size,
            records,
            mean_psnr_db,
            compression_ratio,
            resolution,
        })
    }

    pub fn read_from(path: &Path) -> Result<VideoTrace, TraceError> {
        VideoTrace::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialization; `parse` of the result reproduces the trace
    /// exactly.
    pub fn to_tsv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# codec={}\n", self.codec.label()));
        out.push_str(&format!("# fps={}\n", self.fps));
        out.push_str(&format!("# gop={}\n", self.gop_size));
        let per_frame_psnr = self.records.first().is_some_and(|r| r.psnr_db.is_some());
        if !per_frame_psnr {
            if let Some(p) = self.mean_psnr_db {
                if self.codec.default_mean_psnr_db() != Some(p) {
                    out.push_str(&format!("# mean_psnr={p}\n"));
                }
            }
        }
        if let Some(cr) = self.compression_ratio {
            out.push_str(&format!("# compression_ratio={cr}\n"));
        }
        if let Some(res) = &self.resolution {
            out.push_str(&format!("# resolution={res}\n"));
        }
        for r in &self.records {
            match r.psnr_db {
                Some(p) => out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    r.index,
                    r.frame_type.as_str(),
                    r.size_bytes,
                    p
                )),
                None => out.push_str(&format!(
                    "{}\t{}\t{}\n",
                    r.index,
                    r.frame_type.as_str(),
                    r.size_bytes
                )),
            }
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_tsv_string())?;
        Ok(())
    }

    pub fn stats(&self) -> TraceStats {
        let n = self.records.len();
        let mut min = u32::MAX;
        let mut max = 0u32;
        let mut total: u64 = 0;
        for r in &self.records {
            min = min.min(r.size_bytes);
            max = max.max(r.size_bytes);
            total += u64::from(r.size_bytes);
        }
        let mean = total as f64 / n as f64;
        // Peak rate: max byte sum over a sliding one-second window (fps
        // consecutive frames), scaled to bits per second.
        let window = (self.fps.round() as usize).max(1).min(n);
        let mut window_sum: u64 = self.records[..window]
            .iter()
            .map(|r| u64::from(r.size_bytes))
            .sum();
        let mut peak_sum = window_sum;
        for i in window..n {
            window_sum += u64::from(self.records[i].size_bytes);
            window_sum -= u64::from(self.records[i - window].size_bytes);
            peak_sum = peak_sum.max(window_sum);
        }
        let peak_rate_bps = peak_sum as f64 * 8.0 * self.fps / window as f64;
        TraceStats {
            frames: n,
            min_frame_bytes: min,
            max_frame_bytes: max,
            mean_frame_bytes: mean,
            mean_rate_bps: mean * 8.0 * self.fps,
            peak_rate_bps,
            mean_psnr_db: self.mean_psnr_db,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStats {
    pub frames: usize,
    pub min_frame_bytes: u32,
    pub max_frame_bytes: u32,
    pub mean_frame_bytes: f64,
    pub mean_rate_bps: f64,
    pub peak_rate_bps: f64,
    pub mean_psnr_db: Option<f64>,
}

/// Reference targets for the two codecs the simulator ships presets for.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecPreset {
    pub codec: Codec,
    pub mean_frame_bytes: f64,
    pub peak_frame_bytes: u32,
    pub mean_psnr_db: f64,
}

impl CodecPreset {
    pub fn svc() -> CodecPreset {
        CodecPreset {
            codec: Codec::H264Svc,
            mean_frame_bytes: 8440.74,
            peak_frame_bytes: 58_150,
            mean_psnr_db: 47.89,
        }
    }

    pub fn avc() -> CodecPreset {
        CodecPreset {
            codec: Codec::H264Avc,
            mean_frame_bytes: 7004.52,
            peak_frame_bytes: 62_269,
            mean_psnr_db: 46.49,
        }
    }

    pub fn by_name(name: &str) -> Option<CodecPreset> {
        match name.to_ascii_lowercase().as_str() {
            "svc" | "h264-svc" => Some(CodecPreset::svc()),
            "avc" | "h264-avc" => Some(CodecPreset::avc()),
            _ => None,
        }
    }
}

/// Targets for gamma-model trace synthesis.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub codec: Codec,
    pub mean_frame_bytes: f64,
    pub peak_frame_bytes: u32,
    pub frames: u32,
    pub fps: f64,
    pub gop_size: u32,
}

impl SynthParams {
    pub fn from_preset(preset: &CodecPreset, frames: u32) -> SynthParams {
        SynthParams {
            codec: preset.codec.clone(),
            mean_frame_bytes: preset.mean_frame_bytes,
            peak_frame_bytes: preset.peak_frame_bytes,
            frames,
            fps: 30.0,
            gop_size: 16,
        }
    }
}

/// Mean I-frame size relative to the mean P-frame size in the synthesis
/// model.
const I_TO_P_MEAN_RATIO: f64 = 4.0;

/// Gamma shape used for both frame classes; shape 2 gives the mild
/// right skew seen in encoded video without a heavy tail.
const GAMMA_SHAPE: f64 = 2.0;

/// Synthesizes a trace with one I frame per GOP and gamma-distributed
/// sizes. I frames draw from a gamma with four times the P mean; the whole
/// sample is then rescaled to hit the target mean exactly before clamping
/// into `[1, peak_frame_bytes]` (the clamp costs the mean about a percent).
/// Deterministic in the stream: the same `(seed, stream id)` reproduces the
/// same trace byte for byte.
pub fn gen_gamma_trace(
    params: &SynthParams,
    stream: &mut RandomStream,
) -> Result<VideoTrace, TraceError> {
    if !(params.mean_frame_bytes > 0.0 && params.mean_frame_bytes.is_finite()) {
        return Err(TraceError::Infeasible("mean_frame_bytes must be > 0".into()));
    }
    if (params.peak_frame_bytes as f64) <= params.mean_frame_bytes {
        return Err(TraceError::Infeasible(format!(
            "peak_frame_bytes {} must exceed mean_frame_bytes {}",
            params.peak_frame_bytes, params.mean_frame_bytes
        )));
    }
    if params.gop_size == 0 {
        return Err(TraceError::Infeasible("gop_size must be >= 1".into()));
    }
    if params.frames < params.gop_size {
        return Err(TraceError::Infeasible(format!(
            "frames {} must cover at least one GOP of {}",
            params.frames, params.gop_size
        )));
    }
    if !(params.fps > 0.0 && params.fps.is_finite()) {
        return Err(TraceError::Infeasible("fps must be > 0".into()));
    }

    let n = params.frames as usize;
    // Unit-scale draws: P mean 1, I mean I_TO_P_MEAN_RATIO.
    let mut raw = Vec::with_capacity(n);
    let mut sum = 0.0f64;
    for i in 0..n {
        let is_i = (i as u32) % params.gop_size == 0;
        let mean = if is_i { I_TO_P_MEAN_RATIO } else { 1.0 };
        let draw = stream.gamma(GAMMA_SHAPE, mean / GAMMA_SHAPE);
        sum += draw;
        raw.push(draw);
    }
    let rescale = params.mean_frame_bytes * n as f64 / sum;
    let records = raw
        .into_iter()
        .enumerate()
        .map(|(i, draw)| {
            let scaled = (draw * rescale).round();
            let size_bytes = (scaled.max(1.0) as u32).min(params.peak_frame_bytes);
            VideoTraceRecord {
                index: i as u32,
                frame_type: if (i as u32) % params.gop_size == 0 {
                    FrameType::I
                } else {
                    FrameType::P
                },
                size_bytes,
                psnr_db: None,
            }
        })
        .collect();
    Ok(VideoTrace {
        mean_psnr_db: params.codec.default_mean_psnr_db(),
        codec: params.codec.clone(),
        fps: params.fps,
        gop_size: params.gop_size,
        records,
        compression_ratio: None,
        resolution: None,
    })
}

/// Offset of frame `k`'s emission from the stream start: `k / fps`, rounded
/// to the nearest microsecond per frame so the error never accumulates.
pub fn emission_offset(k: u64, fps: f64) -> SimTime {
    SimTime::from_micros((k as f64 * 1e6 / fps).round() as u64)
}

/// Splits a video frame into IP packet payloads under the given MTU. Every
/// packet additionally carries [`PACKET_HEADER_BYTES`] on the wire.
///
/// # Panics
/// If the MTU does not leave room for at least one payload byte.
pub fn packetize(frame_bytes: u32, mtu_bytes: u32) -> Vec<u32> {
    assert!(
        mtu_bytes > PACKET_HEADER_BYTES,
        "mtu {mtu_bytes} leaves no payload room"
    );
    let payload = mtu_bytes - PACKET_HEADER_BYTES;
    let count = frame_bytes.div_ceil(payload);
    let mut sizes = Vec::with_capacity(count as usize);
    let mut remaining = frame_bytes;
    while remaining > 0 {
        let take = remaining.min(payload);
        sizes.push(take);
        remaining -= take;
    }
    sizes
}
