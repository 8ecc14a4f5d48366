//! Model file format: magic "MCNN", version u32, precision u8, dims count
//! u32, per-layer dims u32, fp32 normalization stats (means then stddevs),
//! then per layer the weight and bias payloads — f32 words for fp32
//! models, raw binary16 words for mixed models. Little-endian throughout.

use super::model::{Activation, MlpModel, Precision};
use crate::{Error, Result};
use half::f16;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MCNN";
const VERSION: u32 = 1;

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    let tag: u8 = match model.precision {
        Precision::Fp32 => 0,
        Precision::MixedFp16 => 1,
    };
    w.write_all(&[tag]).map_err(io_err)?;
    w.write_all(&(model.layer_dims.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    for &d in &model.layer_dims {
        w.write_all(&(d as u32).to_le_bytes()).map_err(io_err)?;
    }
    for &m in &model.norm_mean {
        w.write_all(&m.to_le_bytes()).map_err(io_err)?;
    }
    for &s in &model.norm_std {
        w.write_all(&s.to_le_bytes()).map_err(io_err)?;
    }
    for layer in &model.layers {
        match model.precision {
            Precision::Fp32 => {
                for &v in layer.weights.iter().chain(&layer.biases) {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
            }
            Precision::MixedFp16 => {
                for v in layer.weights_f16.iter().chain(&layer.biases_f16) {
                    w.write_all(&v.to_bits().to_le_bytes()).map_err(io_err)?;
                }
            }
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_model(path: &Path, activation: Activation) -> Result<MlpModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    let bad = |reason: &str| Error::format(path.display().to_string(), reason);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(io_err)?;
    if u32::from_le_bytes(u32buf) != VERSION {
        return Err(bad("unsupported version"));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag).map_err(io_err)?;
    let precision = match tag[0] {
        0 => Precision::Fp32,
        1 => Precision::MixedFp16,
        _ => return Err(bad("unknown precision tag")),
    };
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let n_dims = u32::from_le_bytes(u32buf) as usize;
    if n_dims < 2 || n_dims > 64 {
        return Err(bad("implausible layer count"));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        r.read_exact(&mut u32buf).map_err(io_err)?;
        dims.push(u32::from_le_bytes(u32buf) as usize);
    }
    let read_f32s = |r: &mut BufReader<std::fs::File>, n: usize| -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 4];
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(io_err)?;
            out.push(f32::from_le_bytes(buf));
        }
        Ok(out)
    };
    let read_f16s = |r: &mut BufReader<std::fs::File>, n: usize| -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 2];
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(io_err)?;
            out.push(f16::from_bits(u16::from_le_bytes(buf)).to_f32());
        }
        Ok(out)
    };
    let norm_mean = read_f32s(&mut r, dims[0])?;
    let norm_std = read_f32s(&mut r, dims[0])?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..n_dims - 1 {
        let (cols, rows) = (dims[l], dims[l + 1]);
        let (w, b) = match precision {
            Precision::Fp32 => (read_f32s(&mut r, rows * cols)?, read_f32s(&mut r, rows)?),
            Precision::MixedFp16 => (read_f16s(&mut r, rows * cols)?, read_f16s(&mut r, rows)?),
        };
        weights.push(w);
        biases.push(b);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(io_err)? != 0 {
        return Err(bad("trailing bytes"));
    }
    MlpModel::new(dims, weights, biases, norm_mean, norm_std, precision, activation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_bit_exact_per_precision() {
        let dir = tempfile::tempdir().unwrap();
        for (i, precision) in [Precision::Fp32, Precision::MixedFp16].iter().enumerate() {
            let m = MlpModel::random(&[5, 24, 24, 3], 31, *precision, Activation::Table).unwrap();
            let path = dir.path().join(format!("model{i}.mcnn"));
            save_model(&m, &path).unwrap();
            let loaded = load_model(&path, Activation::Table).unwrap();
            assert_eq!(loaded.layer_dims, m.layer_dims);
            assert_eq!(loaded.precision, m.precision);
            for (a, b) in loaded.layers.iter().zip(&m.layers) {
                assert_eq!(a.weights, b.weights);
                assert_eq!(a.biases, b.biases);
                assert_eq!(a.weights_f16, b.weights_f16);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let x: Vec<f32> = (0..5 * 9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert_eq!(loaded.infer(&x).unwrap(), m.infer(&x).unwrap());
        }
    }

    #[test]
    fn fp16_file_about_half_the_size() {
        let dir = tempfile::tempdir().unwrap();
        let dims = [20usize, 128, 128, 17];
        let m32 = MlpModel::random(&dims, 1, Precision::Fp32, Activation::Exact).unwrap();
        let m16 = MlpModel::random(&dims, 1, Precision::MixedFp16, Activation::Exact).unwrap();
        let p32 = dir.path().join("m32");
        let p16 = dir.path().join("m16");
        save_model(&m32, &p32).unwrap();
        save_model(&m16, &p16).unwrap();
        let s32 = std::fs::metadata(&p32).unwrap().len() as f64;
        let s16 = std::fs::metadata(&p16).unwrap().len() as f64;
        let ratio = s16 / s32;
        assert!(ratio > 0.45 && ratio < 0.55, "ratio {ratio}");
    }

    #[test]
    fn corrupted_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(load_model(&path, Activation::Exact).is_err());

        let m = MlpModel::random(&[3, 4, 2], 5, Precision::Fp32, Activation::Exact).unwrap();
        let good = dir.path().join("good");
        save_model(&m, &good).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        let truncated = dir.path().join("short");
        std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_model(&truncated, Activation::Exact).is_err());
    }
}
