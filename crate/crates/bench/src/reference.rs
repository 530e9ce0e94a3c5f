//! Reference-solution management: computation, an in-process memo, and a
//! disk cache keyed by (problem, parameters, reference step, solver).
//! Loading refuses a file whose key does not match the request.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use lodei_core::mat::Mat;
use lodei_core::tucker::Tensor3;

use crate::error::BenchError;

type C = Complex64;

/// Snapshots of a dense reference trajectory plus the warm-up handoff state.
#[derive(Clone)]
pub enum RefData {
    MatReal {
        warm: Mat<f64>,
        snaps: Vec<(f64, Mat<f64>)>,
    },
    MatComplex {
        warm: Mat<C>,
        snaps: Vec<(f64, Mat<C>)>,
    },
    TenReal {
        warm: Tensor3<f64>,
        snaps: Vec<(f64, Tensor3<f64>)>,
    },
    TenComplex {
        warm: Tensor3<C>,
        snaps: Vec<(f64, Tensor3<C>)>,
    },
}

fn memo() -> &'static Mutex<HashMap<String, Arc<RefData>>> {
    static MEMO: OnceLock<Mutex<HashMap<String, Arc<RefData>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch from the in-process memo or compute (holding the lock, so shared
/// references are computed once per process).
pub fn memoized(key: &str, compute: impl FnOnce() -> Result<RefData, BenchError>) -> Result<Arc<RefData>, BenchError> {
    let mut guard = memo().lock().unwrap();
    if let Some(hit) = guard.get(key) {
        return Ok(hit.clone());
    }
    let data = Arc::new(compute()?);
    guard.insert(key.to_string(), data.clone());
    Ok(data)
}

const MAGIC: &[u8; 8] = b"LODEIRF1";

pub fn save(path: &str, key: &str, data: &RefData) -> Result<(), BenchError> {
    if let Some(parent) = std::path::Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| BenchError::Io(format!("cannot create reference file {path}: {e}")))?;
    f.write_all(MAGIC)?;
    let kb = key.as_bytes();
    f.write_all(&(kb.len() as u64).to_le_bytes())?;
    f.write_all(kb)?;
    match data {
        RefData::MatReal { warm, snaps } => {
            f.write_all(&[0u8])?;
            write_mat_f64(&mut f, warm)?;
            f.write_all(&(snaps.len() as u64).to_le_bytes())?;
            for (t, m) in snaps {
                f.write_all(&t.to_le_bytes())?;
                write_mat_f64(&mut f, m)?;
            }
        }
        RefData::MatComplex { warm, snaps } => {
            f.write_all(&[1u8])?;
            write_mat_c64(&mut f, warm)?;
            f.write_all(&(snaps.len() as u64).to_le_bytes())?;
            for (t, m) in snaps {
                f.write_all(&t.to_le_bytes())?;
                write_mat_c64(&mut f, m)?;
            }
        }
        RefData::TenReal { warm, snaps } => {
            f.write_all(&[2u8])?;
            write_ten_f64(&mut f, warm)?;
            f.write_all(&(snaps.len() as u64).to_le_bytes())?;
            for (t, m) in snaps {
                f.write_all(&t.to_le_bytes())?;
                write_ten_f64(&mut f, m)?;
            }
        }
        RefData::TenComplex { warm, snaps } => {
            f.write_all(&[3u8])?;
            write_ten_c64(&mut f, warm)?;
            f.write_all(&(snaps.len() as u64).to_le_bytes())?;
            for (t, m) in snaps {
                f.write_all(&t.to_le_bytes())?;
                write_ten_c64(&mut f, m)?;
            }
        }
    }
    Ok(())
}

pub fn load(path: &str, expected_key: &str) -> Result<RefData, BenchError> {
    let mut f = std::fs::File::open(path)
        .map_err(|_| BenchError::Io(format!("reference file not found: {path}")))?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(BenchError::Io(format!("{path} is not a reference file")));
    }
    let klen = read_u64(&mut f)? as usize;
    let mut kb = vec![0u8; klen];
    f.read_exact(&mut kb)?;
    let key = String::from_utf8_lossy(&kb).to_string();
    if key != expected_key {
        return Err(BenchError::Io(format!(
            "reference key mismatch in {path}: file has '{key}', run needs '{expected_key}'"
        )));
    }
    let mut tag = [0u8; 1];
    f.read_exact(&mut tag)?;
    let data = match tag[0] {
        0 => {
            let warm = read_mat_f64(&mut f)?;
            let n = read_u64(&mut f)? as usize;
            let mut snaps = Vec::with_capacity(n);
            for _ in 0..n {
                let t = read_f64(&mut f)?;
                snaps.push((t, read_mat_f64(&mut f)?));
            }
            RefData::MatReal { warm, snaps }
        }
        1 => {
            let warm = read_mat_c64(&mut f)?;
            let n = read_u64(&mut f)? as usize;
            let mut snaps = Vec::with_capacity(n);
            for _ in 0..n {
                let t = read_f64(&mut f)?;
                snaps.push((t, read_mat_c64(&mut f)?));
            }
            RefData::MatComplex { warm, snaps }
        }
        2 => {
            let warm = read_ten_f64(&mut f)?;
            let n = read_u64(&mut f)? as usize;
            let mut snaps = Vec::with_capacity(n);
            for _ in 0..n {
                let t = read_f64(&mut f)?;
                snaps.push((t, read_ten_f64(&mut f)?));
            }
            RefData::TenReal { warm, snaps }
        }
        3 => {
            let warm = read_ten_c64(&mut f)?;
            let n = read_u64(&mut f)? as usize;
            let mut snaps = Vec::with_capacity(n);
            for _ in 0..n {
                let t = read_f64(&mut f)?;
                snaps.push((t, read_ten_c64(&mut f)?));
            }
            RefData::TenComplex { warm, snaps }
        }
        _ => return Err(BenchError::Io(format!("{path}: unknown payload tag"))),
    };
    Ok(data)
}

fn read_u64(f: &mut impl Read) -> Result<u64, BenchError> {
    let mut b = [0u8; 8];
    f.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(f: &mut impl Read) -> Result<f64, BenchError> {
    let mut b = [0u8; 8];
    f.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn write_mat_f64(f: &mut impl Write, m: &Mat<f64>) -> Result<(), BenchError> {
    f.write_all(&(m.nrows() as u64).to_le_bytes())?;
    f.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for x in m.data() {
        f.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_mat_f64(f: &mut impl Read) -> Result<Mat<f64>, BenchError> {
    let r = read_u64(f)? as usize;
    let c = read_u64(f)? as usize;
    let mut data = Vec::with_capacity(r * c);
    for _ in 0..r * c {
        data.push(read_f64(f)?);
    }
    Ok(Mat::from_col_major(r, c, data))
}

fn write_mat_c64(f: &mut impl Write, m: &Mat<C>) -> Result<(), BenchError> {
    f.write_all(&(m.nrows() as u64).to_le_bytes())?;
    f.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for x in m.data() {
        f.write_all(&x.re.to_le_bytes())?;
        f.write_all(&x.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_mat_c64(f: &mut impl Read) -> Result<Mat<C>, BenchError> {
    let r = read_u64(f)? as usize;
    let c = read_u64(f)? as usize;
    let mut data = Vec::with_capacity(r * c);
    for _ in 0..r * c {
        let re = read_f64(f)?;
        let im = read_f64(f)?;
        data.push(C::new(re, im));
    }
    Ok(Mat::from_col_major(r, c, data))
}

fn write_ten_f64(f: &mut impl Write, t: &Tensor3<f64>) -> Result<(), BenchError> {
    let d = t.dims();
    for n in [d.0, d.1, d.2] {
        f.write_all(&(n as u64).to_le_bytes())?;
    }
    for x in t.data() {
        f.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_ten_f64(f: &mut impl Read) -> Result<Tensor3<f64>, BenchError> {
    let d = (
        read_u64(f)? as usize,
        read_u64(f)? as usize,
        read_u64(f)? as usize,
    );
    let mut t = Tensor3::zeros(d);
    for i in 0..t.len() {
        t.data_mut()[i] = read_f64(f)?;
    }
    Ok(t)
}

fn write_ten_c64(f: &mut impl Write, t: &Tensor3<C>) -> Result<(), BenchError> {
    let d = t.dims();
    for n in [d.0, d.1, d.2] {
        f.write_all(&(n as u64).to_le_bytes())?;
    }
    for x in t.data() {
        f.write_all(&x.re.to_le_bytes())?;
        f.write_all(&x.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_ten_c64(f: &mut impl Read) -> Result<Tensor3<C>, BenchError> {
    let d = (
        read_u64(f)? as usize,
        read_u64(f)? as usize,
        read_u64(f)? as usize,
    );
    let mut t = Tensor3::zeros(d);
    for i in 0..t.len() {
        let re = read_f64(f)?;
        let im = read_f64(f)?;
        t.data_mut()[i] = C::new(re, im);
    }
    Ok(t)
}
