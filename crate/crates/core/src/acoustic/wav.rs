//! 16-bit PCM mono RIFF/WAVE reading and writing.

use std::fs;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

pub fn encode_pcm16_mono(w: &Waveform) -> Vec<u8> {
    let data_len = (w.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &w.samples {
        // Same 32768 scale as the reader; +1.0 saturates at i16::MAX.
        let q = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Parse a PCM WAV. Multi-channel input is mixed down to mono; 8, 16, 24
/// and 32-bit integer samples are accepted.
pub fn decode(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("not a RIFF/WAVE file".into()));
    }
    let u16_at = |b: &[u8], i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
    let u32_at = |b: &[u8], i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);

    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Wav("fmt chunk too short".into()));
                }
                fmt = Some((u16_at(body, 0), u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => {
                let (format, channels, rate, bits) =
                    fmt.ok_or_else(|| Error::Wav("data chunk before fmt chunk".into()))?;
                // 0xFFFE is WAVE_FORMAT_EXTENSIBLE; assume integer PCM inside.
                if format != 1 && format != 0xFFFE {
                    return Err(Error::Wav(format!("unsupported format tag {format}")));
                }
                if channels == 0 || rate == 0 {
                    return Err(Error::Wav("zero channels or sample rate".into()));
                }
                let width = match bits {
                    8 | 16 | 24 | 32 => bits as usize / 8,
                    _ => return Err(Error::Wav(format!("unsupported bit depth {bits}"))),
                };
                let frame = width * channels as usize;
                let samples = body
                    .chunks_exact(frame)
                    .map(|fr| {
                        let sum: f64 = fr.chunks_exact(width).map(|c| sample_to_f64(c, bits)).sum();
                        sum / channels as f64
                    })
                    .collect();
                return Ok(Waveform::new(samples, rate));
            }
            _ => {}
        }
        // Chunks are word aligned.
        pos = body_start + size + (size & 1);
    }
    Err(Error::Wav("no data chunk".into()))
}

fn sample_to_f64(c: &[u8], bits: u16) -> f64 {
    match bits {
        8 => (c[0] as f64 - 128.0) / 128.0,
        16 => i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0,
        24 => {
            let v = i32::from_le_bytes([0, c[0], c[1], c[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        _ => i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64 / 2_147_483_648.0,
    }
}

pub fn write(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    fs::write(path, encode_pcm16_mono(w))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Waveform> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let w = Waveform::new(vec![0.0, 1.0, -1.0], 16_000);
        let b = encode_pcm16_mono(&w);
        assert_eq!(b.len(), 44 + 6);
        assert_eq!(&b[0..4], b"RIFF");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 36 + 6);
        assert_eq!(u32::from_le_bytes(b[24..28].try_into().unwrap()), 16_000);
        assert_eq!(i16::from_le_bytes([b[46], b[47]]), i16::MAX);
        assert_eq!(i16::from_le_bytes([b[48], b[49]]), i16::MIN);
    }

    #[test]
    fn round_trip_within_quantization() {
        let samples: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.01).sin() * 0.9).collect();
        let w = Waveform::new(samples.clone(), 22_050);
        let back = decode(&encode_pcm16_mono(&w)).unwrap();
        assert_eq!(back.sample_rate, 22_050);
        for (a, b) in samples.iter().zip(&back.samples) {
            assert!((a - b).abs() < 1.0 / 16_000.0);
        }
    }

    #[test]
    fn stereo_is_mixed_down_and_odd_chunks_skipped() {
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF\0\0\0\0WAVE");
        b.extend_from_slice(b"LIST\x03\0\0\0abc\0");
        b.extend_from_slice(b"fmt \x10\0\0\0");
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&8000u32.to_le_bytes());
        b.extend_from_slice(&32000u32.to_le_bytes());
        b.extend_from_slice(&4u16.to_le_bytes());
        b.extend_from_slice(&16u16.to_le_bytes());
        b.extend_from_slice(b"data\x04\0\0\0");
        b.extend_from_slice(&16384i16.to_le_bytes());
        b.extend_from_slice(&0i16.to_le_bytes());
        let w = decode(&b).unwrap();
        assert_eq!(w.sample_rate, 8000);
        assert_eq!(w.samples, vec![0.25]);
    }

    #[test]
    fn garbage_rejected() {
        assert!(decode(b"hello").is_err());
        assert!(decode(b"RIFF\0\0\0\0WAVE").is_err());
    }
}
