//! File formats: the binary IQ record, truth and table CSVs, and atomic
//! writes.
//!
//! IQ binary layout, all little-endian:
//!
//! | offset | type      | field                     |
//! |--------|-----------|---------------------------|
//! | 0      | `[u8; 4]` | magic `QJIQ`              |
//! | 4      | `u32`     | version, currently 1      |
//! | 8      | `f64`     | `t_m` in seconds          |
//! | 16     | `u64`     | sample count `n`          |
//! | 24     | `f64 × 2n`| interleaved `I, Q` pairs  |
//!
//! NaN marks an unobserved sample.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::jumps::{IqRecord, QubitState, TruthEntry, TruthTrace};

pub const IQ_MAGIC: &[u8; 4] = b"QJIQ";
pub const IQ_VERSION: u32 = 1;
const HEADER_LEN: u64 = 24;

/// Nine significant digits; NaN is written as `nan`.
pub fn fmt9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.8e}")
    }
}

/// Parse a CSV float written by [`fmt9`].
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nan") {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

pub fn write_iq<W: Write>(rec: &IqRecord, w: W) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(IQ_MAGIC)?;
    w.write_all(&IQ_VERSION.to_le_bytes())?;
    w.write_all(&rec.t_m.to_le_bytes())?;
    w.write_all(&(rec.len() as u64).to_le_bytes())?;
    for (i, q) in rec.i.iter().zip(&rec.q) {
        w.write_all(&i.to_le_bytes())?;
        w.write_all(&q.to_le_bytes())?;
    }
    w.flush()
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::Format {
                    offset: offset + filled as u64,
                    reason: format!("unexpected end of file reading {what}"),
                })
            }
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn read_iq<R: Read>(r: R) -> Result<IqRecord> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    read_exact_at(&mut r, &mut magic, 0, "magic")?;
    if &magic != IQ_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad magic {magic:?}, expected \"QJIQ\""),
        });
    }
    let mut b4 = [0u8; 4];
    read_exact_at(&mut r, &mut b4, 4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != IQ_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let mut b8 = [0u8; 8];
    read_exact_at(&mut r, &mut b8, 8, "t_m")?;
    let t_m = f64::from_le_bytes(b8);
    if !(t_m > 0.0 && t_m.is_finite()) {
        return Err(Error::Format {
            offset: 8,
            reason: format!("measurement interval {t_m} must be positive"),
        });
    }
    read_exact_at(&mut r, &mut b8, 16, "sample count")?;
    let n = u64::from_le_bytes(b8);
    let mut i = Vec::new();
    let mut q = Vec::new();
    let mut offset = HEADER_LEN;
    let mut pair = [0u8; 16];
    for _ in 0..n {
        read_exact_at(&mut r, &mut pair, offset, "sample data")?;
        i.push(f64::from_le_bytes(pair[..8].try_into().expect("8 bytes")));
        q.push(f64::from_le_bytes(pair[8..].try_into().expect("8 bytes")));
        offset += 16;
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format {
            offset,
            reason: format!("trailing data after {n} samples"),
        });
    }
    Ok(IqRecord {
        t_m,
        i,
        q,
        ground_fraction: None,
    })
}

pub fn read_iq_file(path: &Path) -> Result<IqRecord> {
    read_iq(fs::File::open(path)?)
}

/// Path of the truth sidecar for an IQ file: `<path>.truth`.
pub fn truth_path(iq_path: &Path) -> PathBuf {
    let mut s = iq_path.as_os_str().to_owned();
    s.push(".truth");
    PathBuf::from(s)
}

/// Inverse of [`TruthTrace::write_csv`]. Dead intervals are not stored and
/// come back empty.
pub fn read_truth_csv<R: Read>(r: R, duration: f64) -> Result<TruthTrace> {
    let mut entries = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let here = offset;
        offset += line.len() as u64 + 1;
        if lineno == 0 {
            if line.trim() != "time_s,state,N" {
                return Err(Error::Format {
                    offset: here,
                    reason: "expected header time_s,state,N".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Format {
            offset: here,
            reason: format!("line {}: {reason}", lineno + 1),
        };
        let mut f = line.split(',');
        let time = f.next().and_then(parse_float).ok_or_else(|| bad("bad time"))?;
        let state = match f.next().map(str::trim) {
            Some("g") => QubitState::Ground,
            Some("e") => QubitState::Excited,
            _ => return Err(bad("state must be g or e")),
        };
        let n = f
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad QP count"))?;
        entries.push(TruthEntry { time, state, n });
    }
    if entries.is_empty() {
        return Err(Error::Format {
            offset,
            reason: "truth file has no entries".into(),
        });
    }
    Ok(TruthTrace {
        entries,
        duration,
        dead: Vec::new(),
    })
}

/// CSV `time_s,x_qp`.
pub fn write_ode_csv<W: Write>(times: &[f64], x: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "time_s,x_qp")?;
    for (t, v) in times.iter().zip(x) {
        writeln!(w, "{},{}", fmt9(*t), fmt9(*v))?;
    }
    Ok(())
}

/// Write `path` through a temporary sibling and a rename, so readers never
/// see a partial file.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        Ok::<_, io::Error>(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}
