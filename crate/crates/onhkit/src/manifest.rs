//! Image manifests: `filename,label[,cx,cy,disc_r,cup_r]`.

use std::path::{Component, Path, PathBuf};

use onhkit_core::eval::{GLAUCOMA, NORMAL};
use onhkit_core::synth::SynthTruth;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 6] = ["filename", "label", "cx", "cy", "disc_r", "cup_r"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub cx: usize,
    pub cy: usize,
    pub disc_r: f64,
    pub cup_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Path relative to the manifest's directory.
    pub filename: String,
    pub label: usize,
    pub geometry: Option<Geometry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<Entry>,
}

pub fn label_name(label: usize) -> &'static str {
    if label == GLAUCOMA {
        "glaucoma"
    } else {
        "normal"
    }
}

pub fn parse_label(word: &str) -> Option<usize> {
    match word {
        "normal" => Some(NORMAL),
        "glaucoma" => Some(GLAUCOMA),
        _ => None,
    }
}

impl Manifest {
    pub fn path_of(&self, e: &Entry) -> PathBuf {
        self.dir.join(&e.filename)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&bytes, path, dir)
    }

    pub fn parse(bytes: &[u8], origin: &Path, dir: PathBuf) -> Result<Self> {
        let err = |line: u64, message: String| CliError::Parse {
            file: origin.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(bytes);
        let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols != HEADER[..2] && cols != HEADER {
            return Err(err(
                1,
                format!("expected header {} (geometry optional)", HEADER.join(",")),
            ));
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let filename = rec[0].to_string();
            let rel = Path::new(&filename);
            if filename.is_empty() || rel.components().any(|c| !matches!(c, Component::Normal(_))) {
                return Err(err(
                    line,
                    format!("path {filename:?} must stay inside the manifest directory"),
                ));
            }
            let label =
                parse_label(&rec[1]).ok_or_else(|| err(line, format!("label {:?} is not normal/glaucoma", &rec[1])))?;
            let geometry = if rec.len() == 6 && rec.iter().skip(2).any(|f| !f.is_empty()) {
                let num = |i: usize| -> Result<f64> {
                    rec[i]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v >= 0.0)
                        .ok_or_else(|| err(line, format!("bad {} value {:?}", HEADER[i], &rec[i])))
                };
                let int = |i: usize| -> Result<usize> {
                    rec[i]
                        .parse::<usize>()
                        .map_err(|_| err(line, format!("bad {} value {:?}", HEADER[i], &rec[i])))
                };
                Some(Geometry {
                    cx: int(2)?,
                    cy: int(3)?,
                    disc_r: num(4)?,
                    cup_r: num(5)?,
                })
            } else {
                None
            };
            entries.push(Entry {
                filename,
                label,
                geometry,
            });
        }
        Ok(Manifest { dir, entries })
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for e in &self.entries {
            let g = e.geometry.map(|g| {
                [
                    g.cx.to_string(),
                    g.cy.to_string(),
                    format!("{:.6}", g.disc_r),
                    format!("{:.6}", g.cup_r),
                ]
            });
            let g = g.unwrap_or_default();
            w.write_record([e.filename.as_str(), label_name(e.label), &g[0], &g[1], &g[2], &g[3]])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| CliError::io(path, e))
    }
}

impl Geometry {
    pub fn truth(&self, cutoff: f64) -> SynthTruth {
        SynthTruth::from_geometry(self.cx, self.cy, self.disc_r, self.cup_r, cutoff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Manifest> {
        Manifest::parse(text.as_bytes(), Path::new("m.csv"), PathBuf::from("/data"))
    }

    #[test]
    fn round_trip_with_geometry() {
        let m = parse("filename,label,cx,cy,disc_r,cup_r\na.ppm,glaucoma,10,12,5.500000,4.000000\nb.ppm,normal,,,,\n")
            .unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].label, GLAUCOMA);
        assert_eq!(m.entries[0].geometry.unwrap().cx, 10);
        assert_eq!(m.entries[1].geometry, None);
        assert_eq!(m.path_of(&m.entries[0]), PathBuf::from("/data/a.ppm"));
        let back = parse(std::str::from_utf8(&m.to_csv()).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn geometry_columns_are_optional() {
        let m = parse("filename,label\nx.ppm,normal\n").unwrap();
        assert_eq!(m.labels(), vec![NORMAL]);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("filename,label\nx.ppm,normal\ny.ppm,sick\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        assert!(parse("filename,label\n../x.ppm,normal\n").is_err());
        assert!(parse("label,filename\nnormal,x.ppm\n").is_err());
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse("filename,label,cx,cy,disc_r,cup_r\n").unwrap().entries.is_empty());
    }
}
