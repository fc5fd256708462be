//! Versioned binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "HSIC"  u32 version
//! hyper:  u32 code_bits, f64 shared_ratio, f64 lambda1, f64 lambda2_over_n,
//!         f64 lambda3, f64 r, u8 has_nu, f64 nu, u32 outer_iters,
//!         u32 inner_iters, u32 clusters, u32 anchors (0 = unset), u64 seed
//! u32 views
//! per view kernel map: u32 d, u32 l, f64 gamma, d × f64 feature center,
//!         d·l × f64 anchors (row-major), l × f64 embedding center
//! matrix P_S, then one matrix P_I per view: u32 rows, u32 cols, f64 data
//! views × f64 alpha
//! centroids: u32 bits, u32 clusters, u64 words (column-major, zero padded)
//! ```
//!
//! The encoding is a pure function of the model, so equal models produce
//! byte-identical files.

use crate::{CliError, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use hamclust::{DenseMatrix, HsicModel, Hyperparams, KernelMap, PackedBitMatrix};
use std::io::{Read, Write};
use std::path::Path;

pub const MODEL_MAGIC: &[u8; 4] = b"HSIC";
pub const MODEL_VERSION: u32 = 1;

type LE = LittleEndian;

fn put_len(w: &mut Vec<u8>, x: usize) {
    w.write_u32::<LE>(u32::try_from(x).expect("model dimension exceeds u32"))
        .expect("writing to a Vec cannot fail");
}

fn put_f64s(w: &mut Vec<u8>, xs: &[f64]) {
    for &x in xs {
        w.write_f64::<LE>(x).expect("writing to a Vec cannot fail");
    }
}

fn put_matrix(w: &mut Vec<u8>, m: &DenseMatrix) {
    put_len(w, m.rows());
    put_len(w, m.cols());
    put_f64s(w, m.as_slice());
}

/// Serializes a model.
pub fn encode_model(model: &HsicModel) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(MODEL_MAGIC);
    w.write_u32::<LE>(MODEL_VERSION).unwrap();

    let h = &model.hyper;
    put_len(&mut w, h.code_bits);
    put_f64s(&mut w, &[h.shared_ratio, h.lambda1, h.lambda2_over_n, h.lambda3, h.r]);
    w.write_u8(u8::from(h.nu.is_some())).unwrap();
    put_f64s(&mut w, &[h.nu.unwrap_or(0.0)]);
    put_len(&mut w, h.outer_iters);
    put_len(&mut w, h.inner_iters);
    put_len(&mut w, h.clusters);
    put_len(&mut w, h.anchors.unwrap_or(0));
    w.write_u64::<LE>(h.seed).unwrap();

    put_len(&mut w, model.num_views());
    for map in &model.kernel_maps {
        put_len(&mut w, map.input_dim());
        put_len(&mut w, map.dim());
        put_f64s(&mut w, &[map.gamma()]);
        put_f64s(&mut w, map.feature_center());
        put_f64s(&mut w, map.anchors().as_slice());
        put_f64s(&mut w, map.embed_center());
    }
    put_matrix(&mut w, &model.p_shared);
    for p in &model.p_individual {
        put_matrix(&mut w, p);
    }
    put_f64s(&mut w, &model.alpha);
    put_len(&mut w, model.centroids.rows());
    put_len(&mut w, model.centroids.cols());
    for &word in model.centroids.words() {
        w.write_u64::<LE>(word).unwrap();
    }
    w
}

struct Reader<'a> {
    buf: &'a [u8],
}

type Parse<T> = std::result::Result<T, String>;

impl Reader<'_> {
    fn u8(&mut self) -> Parse<u8> {
        self.buf.read_u8().map_err(|_| "unexpected end of file".to_string())
    }

    fn u32(&mut self) -> Parse<usize> {
        self.buf
            .read_u32::<LE>()
            .map(|x| x as usize)
            .map_err(|_| "unexpected end of file".to_string())
    }

    fn u64(&mut self) -> Parse<u64> {
        self.buf
            .read_u64::<LE>()
            .map_err(|_| "unexpected end of file".to_string())
    }

    fn f64(&mut self) -> Parse<f64> {
        self.buf
            .read_f64::<LE>()
            .map_err(|_| "unexpected end of file".to_string())
    }

    fn f64s(&mut self, n: usize) -> Parse<Vec<f64>> {
        if self.buf.len() / 8 < n {
            return Err("unexpected end of file".into());
        }
        let mut out = vec![0.0; n];
        self.buf.read_f64_into::<LE>(&mut out).map_err(|e| e.to_string())?;
        Ok(out)
    }

    fn matrix(&mut self) -> Parse<DenseMatrix> {
        let (r, c) = (self.u32()?, self.u32()?);
        let data = self.f64s(r.checked_mul(c).ok_or("matrix size overflow")?)?;
        DenseMatrix::from_vec(r, c, data).map_err(|e| e.to_string())
    }
}

fn parse(bytes: &[u8]) -> Parse<HsicModel> {
    if bytes.len() < 8 || &bytes[..4] != MODEL_MAGIC {
        return Err("not a model file (missing HSIC magic)".into());
    }
    let mut r = Reader { buf: &bytes[4..] };
    let version = r.u32()?;
    if version != MODEL_VERSION as usize {
        return Err(format!("unsupported model version {version}"));
    }
    let code_bits = r.u32()?;
    let [shared_ratio, lambda1, lambda2_over_n, lambda3, exponent] = [r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?];
    let has_nu = r.u8()? != 0;
    let nu = r.f64()?;
    let hyper = Hyperparams {
        code_bits,
        shared_ratio,
        lambda1,
        lambda2_over_n,
        lambda3,
        r: exponent,
        nu: has_nu.then_some(nu),
        outer_iters: r.u32()?,
        inner_iters: r.u32()?,
        clusters: r.u32()?,
        anchors: Some(r.u32()?).filter(|&a| a > 0),
        seed: r.u64()?,
    };
    hyper.validate().map_err(|e| e.to_string())?;

    let views = r.u32()?;
    let mut kernel_maps = Vec::with_capacity(views.min(1024));
    for _ in 0..views {
        let (d, l) = (r.u32()?, r.u32()?);
        let gamma = r.f64()?;
        let center = r.f64s(d)?;
        let anchors = DenseMatrix::from_vec(d, l, r.f64s(d.checked_mul(l).ok_or("anchor size overflow")?)?)
            .map_err(|e| e.to_string())?;
        let embed_center = r.f64s(l)?;
        kernel_maps.push(KernelMap::from_parts(center, anchors, gamma, embed_center).map_err(|e| e.to_string())?);
    }
    let p_shared = r.matrix()?;
    let p_individual = (0..views).map(|_| r.matrix()).collect::<Parse<Vec<_>>>()?;
    let alpha = r.f64s(views)?;
    let (bits, clusters) = (r.u32()?, r.u32()?);
    let words_per_col = bits.div_ceil(64);
    let count = words_per_col.checked_mul(clusters).ok_or("centroid size overflow")?;
    if r.buf.len() / 8 < count {
        return Err("unexpected end of file".into());
    }
    let words = (0..count).map(|_| r.u64()).collect::<Parse<Vec<_>>>()?;
    let centroids = PackedBitMatrix::from_words(bits, clusters, words).map_err(|e| e.to_string())?;
    if !r.buf.is_empty() {
        return Err(format!("{} trailing bytes", r.buf.len()));
    }
    let model = HsicModel {
        p_shared,
        p_individual,
        alpha,
        centroids,
        kernel_maps,
        hyper,
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<HsicModel, String> {
    parse(bytes)
}

pub fn save_model(path: &Path, model: &HsicModel) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&encode_model(model)).map_err(|e| CliError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<HsicModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    parse(&bytes).map_err(|reason| CliError::format(path, reason))
}
