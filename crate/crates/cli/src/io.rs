//! File formats: correspondence and gyro CSVs, quaternion flags, config
//! files and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use imurel::imu::GyroSample;
use imurel::{Correspondence, RotationQuat, Vec3};
use nalgebra::Quaternion;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

const CORR_HEADER: [&str; 4] = ["u1", "v1", "u2", "v2"];
const GYRO_HEADER: [&str; 4] = ["t", "wx", "wy", "wz"];

/// Reads a four-column numeric CSV with a fixed header. `#` starts a comment
/// line. Errors name the offending line.
fn read_table(path: &Path, header: [&str; 4]) -> Result<Vec<[f64; 4]>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(text.as_bytes());
    let name = path.display();
    let mut records = rdr.records();
    let head = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(Failure::input(format!("{name}: {e}"))),
        None => {
            return Err(Failure::input(format!(
                "{name}: line 1: missing header `{}`",
                header.join(",")
            )))
        }
    };
    let line_of = |r: &csv::StringRecord| r.position().map_or(0, |p| p.line());
    if head.iter().ne(header.iter().copied()) {
        return Err(Failure::input(format!(
            "{name}: line {}: expected header `{}`",
            line_of(&head),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Failure::input(format!("{name}: {e}")))?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(Failure::input(format!("{name}: line {line}: expected 4 fields, got {}", rec.len())));
        }
        let mut row = [0.0; 4];
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::input(format!("{name}: line {line}: `{field}` is not a finite number")))?;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::input(format!("{name}: line {}: no data rows", line_of(&head) + 1)));
    }
    Ok(rows)
}

/// Pixel correspondences, converted to coordinates relative to the image
/// centre.
pub fn read_correspondences(path: &Path, width: f64, height: f64) -> Result<Vec<Correspondence>, Failure> {
    let (cx, cy) = (width / 2.0, height / 2.0);
    Ok(read_table(path, CORR_HEADER)?
        .into_iter()
        .map(|[u1, v1, u2, v2]| Correspondence::new(u1 - cx, v1 - cy, u2 - cx, v2 - cy))
        .collect())
}

pub fn write_correspondences(path: &Path, corrs: &[Correspondence], width: f64, height: f64) -> Result<(), Failure> {
    let (cx, cy) = (width / 2.0, height / 2.0);
    let mut out = String::from("u1,v1,u2,v2\n");
    for c in corrs {
        out.push_str(&format!("{},{},{},{}\n", c.x1.x + cx, c.x1.y + cy, c.x2.x + cx, c.x2.y + cy));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_gyro(path: &Path) -> Result<Vec<GyroSample>, Failure> {
    let rows = read_table(path, GYRO_HEADER)?;
    if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(Failure::input(format!("{}: timestamps must increase strictly", path.display())));
    }
    Ok(rows
        .into_iter()
        .map(|[t, x, y, z]| GyroSample::new(t, Vec3::new(x, y, z)))
        .collect())
}

pub fn write_gyro(path: &Path, samples: &[GyroSample]) -> Result<(), Failure> {
    let mut out = String::from("t,wx,wy,wz\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{}\n", s.t, s.omega.x, s.omega.y, s.omega.z));
    }
    atomic_write(path, out.as_bytes())
}

/// Parses `qw,qx,qy,qz`; the result is renormalized.
pub fn parse_quat(s: &str) -> Result<RotationQuat, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    let [w, x, y, z] = v[..] else {
        return Err(format!("expected qw,qx,qy,qz, got {} values", v.len()));
    };
    let q = Quaternion::new(w, x, y, z);
    if !(q.norm() > 1e-12) || !q.norm().is_finite() {
        return Err("quaternion must have nonzero finite norm".into());
    }
    Ok(RotationQuat::from_quaternion(q))
}

/// Loads a config; `.json` files are JSON, anything else TOML. Unknown or
/// mistyped fields are reported with their path.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let name = path.display();
    let diag = |p: String, e: String| {
        if p.is_empty() || p == "." {
            Failure::input(format!("{name}: {e}"))
        } else {
            Failure::input(format!("{name}: at `{p}`: {e}"))
        }
    };
    if path.extension().is_some_and(|e| e == "json") {
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| diag(e.path().to_string(), e.inner().to_string()))
    } else {
        let de = toml::Deserializer::parse(&text).map_err(|e| Failure::input(format!("{name}: {e}")))?;
        serde_path_to_error::deserialize(de).map_err(|e| diag(e.path().to_string(), e.inner().message().to_string()))
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let io = |e: std::io::Error| Failure::input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
