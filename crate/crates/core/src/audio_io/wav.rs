//! RIFF/WAVE PCM codec (8-bit unsigned and 16-bit signed, mono or stereo).

use std::fs;
use std::path::Path;

use super::{AudioClip, AudioError};

const FORMAT_PCM: u16 = 1;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn malformed(msg: impl Into<String>) -> AudioError {
    AudioError::MalformedContainer(msg.into())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a PCM WAV byte stream into a mono clip. Stereo frames are
/// averaged across channels.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                malformed(format!(
                    "chunk '{}' declares {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                fmt = Some(FmtChunk {
                    format: u16_at(body, 0),
                    channels: u16_at(body, 2),
                    sample_rate: u32_at(body, 4),
                    bits_per_sample: u16_at(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| malformed("missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;

    if fmt.format != FORMAT_PCM {
        return Err(AudioError::UnsupportedEncoding(format!(
            "format code {:#06x}, only PCM (1) is supported",
            fmt.format
        )));
    }
    if fmt.bits_per_sample != 8 && fmt.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{}-bit samples, only 8 and 16 are supported",
            fmt.bits_per_sample
        )));
    }
    if fmt.channels != 1 && fmt.channels != 2 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} channels, only mono and stereo are supported",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(malformed("sample rate is zero"));
    }

    let bytes_per_sample = usize::from(fmt.bits_per_sample / 8);
    let channels = usize::from(fmt.channels);
    let frame_bytes = bytes_per_sample * channels;
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(malformed("data chunk holds no complete sample frame"));
    }

    let decode = |b: &[u8]| -> f64 {
        match bytes_per_sample {
            1 => (f64::from(b[0]) - 128.0) / 128.0,
            _ => f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0,
        }
    };
    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame.chunks_exact(bytes_per_sample).map(decode).sum();
            sum / channels as f64
        })
        .collect();

    AudioClip::new(samples, fmt.sample_rate, None, "")
}

/// Reads and decodes a WAV file; the clip's `source_id` is the path.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut clip = parse_wav(&bytes).map_err(|e| AudioError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })?;
    clip.source_id = path.display().to_string();
    Ok(clip)
}

/// Encodes interleaved samples in [-1, 1] as PCM WAV at 8 or 16 bits.
pub fn encode_wav(interleaved: &[f64], channels: u16, sample_rate: u32, bits: u16) -> Vec<u8> {
    assert!(bits == 8 || bits == 16, "only 8- and 16-bit PCM can be encoded");
    assert!(channels >= 1, "at least one channel");
    let bytes_per_sample = bits / 8;
    let data_len = interleaved.len() * usize::from(bytes_per_sample);
    let block_align = channels * bytes_per_sample;

    let mut out = Vec::with_capacity(44 + data_len + 1);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len + (data_len & 1)) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in interleaved {
        if bits == 8 {
            out.push(((s * 128.0).round() + 128.0).clamp(0.0, 255.0) as u8);
        } else {
            let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&q.to_le_bytes());
        }
    }
    if data_len & 1 == 1 {
        out.push(0);
    }
    out
}

/// Writes a mono 16-bit PCM file.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let path = path.as_ref();
    fs::write(path, encode_wav(clip.samples(), 1, clip.sample_rate(), 16)).map_err(|source| {
        AudioError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}
