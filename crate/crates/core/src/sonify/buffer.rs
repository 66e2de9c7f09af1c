use alloc::vec::Vec;

use super::SonifyError;

/// Interleaved audio, `frames × channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<f32>,
}

impl AudioBuffer {
    pub fn silent(sample_rate: u32, channels: u16, frames: usize) -> Self {
        Self {
            sample_rate,
            channels,
            samples: alloc::vec![0.0; frames * channels as usize],
        }
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        let c = self.channels as usize;
        &self.samples[i * c..(i + 1) * c]
    }

    /// Samples of one channel.
    pub fn channel(&self, ch: usize) -> impl Iterator<Item = f32> + '_ {
        self.samples
            .iter()
            .skip(ch)
            .step_by(self.channels as usize)
            .copied()
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }
}

/// Bytes before the first sample: RIFF header (12), `fmt ` chunk with an
/// 18-byte IEEE float body (26), `fact` chunk (12), `data` chunk header (8).
pub const WAV_HEADER_LEN: usize = 58;

const FORMAT_IEEE_FLOAT: u16 = 3;

/// RIFF/WAVE, 32-bit IEEE float, little-endian, interleaved.
pub fn encode_wav(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.samples.len() * 4) as u32;
    let channels = buf.channels;
    let block_align = channels * 4;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(WAV_HEADER_LEN as u32 - 8 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&18u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());

    out.extend_from_slice(b"fact");
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&(buf.frames() as u32).to_le_bytes());

    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &buf.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads float WAV data; unknown chunks are skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, SonifyError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(SonifyError::Wav("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut format = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or(SonifyError::Wav("chunk runs past the end of the file"))?;
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(SonifyError::Wav("short fmt chunk"));
                }
                if u16_at(bytes, body) != FORMAT_IEEE_FLOAT || u16_at(bytes, body + 14) != 32 {
                    return Err(SonifyError::Wav("not 32-bit IEEE float"));
                }
                let channels = u16_at(bytes, body + 2);
                if channels == 0 {
                    return Err(SonifyError::Wav("zero channels"));
                }
                format = Some((channels, u32_at(bytes, body + 4)));
            }
            b"data" => {
                let (channels, sample_rate) =
                    format.ok_or(SonifyError::Wav("data chunk before fmt chunk"))?;
                if len % (4 * channels as usize) != 0 {
                    return Err(SonifyError::Wav("partial frame in data chunk"));
                }
                let samples = bytes[body..end]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect();
                return Ok(AudioBuffer {
                    sample_rate,
                    channels,
                    samples,
                });
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (len & 1);
    }
    Err(SonifyError::Wav("no data chunk"))
}
