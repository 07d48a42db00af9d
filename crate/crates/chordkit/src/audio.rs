//! WAV input and output. Input is mixed to mono and resampled to the
//! analysis rate.

use std::path::Path;

use audioadapter_buffers::owned::InterleavedOwned;
use chordkit_core::features::{AudioClip, SAMPLE_RATE};
use rubato::{Fft, FixedSync, Resampler};

use crate::error::{Error, Result};

/// Reads 16/24/32-bit integer or float PCM, averaging channels, and
/// resamples to 22050 Hz when needed.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let wav = |source| Error::Wav { path: path.to_path_buf(), source };
    let mut reader = hound::WavReader::open(path).map_err(wav)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>().map_err(wav)?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader.samples::<i32>().map(|s| s.map(|v| v as f32 * scale)).collect::<Result<_, _>>().map_err(wav)?
        }
    };
    let mono: Vec<f32> =
        interleaved.chunks(channels).map(|frame| frame.iter().sum::<f32>() / channels as f32).collect();
    let samples = resample(&mono, spec.sample_rate, SAMPLE_RATE)?;
    Ok(AudioClip::new(samples, SAMPLE_RATE)?)
}

pub fn resample(samples: &[f32], from: u32, to: u32) -> Result<Vec<f32>> {
    if from == to || samples.is_empty() {
        return Ok(samples.to_vec());
    }
    let mut resampler = Fft::<f32>::new(from as usize, to as usize, 1024, 1, FixedSync::Input)
        .map_err(|e| Error::Resample(e.to_string()))?;
    let input = InterleavedOwned::new_from(samples.to_vec(), 1, samples.len())
        .map_err(|e| Error::Resample(e.to_string()))?;
    let out = resampler.process_all(&input, samples.len(), None).map_err(|e| Error::Resample(e.to_string()))?;
    Ok(out.take_data())
}

/// Writes mono 32-bit float PCM.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let wav = |source| Error::Wav { path: path.to_path_buf(), source };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav)?;
    for &s in clip.samples() {
        w.write_sample(s).map_err(wav)?;
    }
    w.finalize().map_err(wav)
}
