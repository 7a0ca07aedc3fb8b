//! File and stream plumbing. A missing path or "-" means standard input or
//! output.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use alphaforge_core::meshio::{self, MeshFormat, PointFormat, ReadOptions};
use alphaforge_core::{Mesh, PointCloud};

use crate::Failure;

fn is_stdio(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

pub fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    if is_stdio(path) {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Data(format!("reading standard input: {e}")))?;
        Ok(s)
    } else {
        let p = path.expect("checked above");
        std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("reading {}: {e}", p.display())))
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    if is_stdio(path) {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Failure::Data(format!("writing standard output: {e}")))
    } else {
        let p = path.expect("checked above");
        std::fs::write(p, text).map_err(|e| Failure::Data(format!("writing {}: {e}", p.display())))
    }
}

/// Explicit format, else the path's extension, else `fallback`.
pub fn mesh_format(explicit: Option<&str>, path: Option<&Path>, fallback: MeshFormat) -> Result<MeshFormat, Failure> {
    match (explicit, path) {
        (Some(f), _) => f.parse().map_err(Failure::from),
        (None, p) if !is_stdio(p) => MeshFormat::from_path(p.expect("not stdio")).map_err(Failure::from),
        _ => Ok(fallback),
    }
}

pub fn point_format(
    explicit: Option<&str>,
    path: Option<&Path>,
    fallback: PointFormat,
) -> Result<PointFormat, Failure> {
    match (explicit, path) {
        (Some(f), _) => f.parse().map_err(Failure::from),
        (None, p) if !is_stdio(p) => PointFormat::from_path(p.expect("not stdio")).map_err(Failure::from),
        _ => Ok(fallback),
    }
}

pub fn read_cloud(path: Option<&Path>, format: Option<&str>) -> Result<PointCloud, Failure> {
    let f = point_format(format, path, PointFormat::Xyz)?;
    Ok(meshio::parse_points(&read_text(path)?, f)?)
}

pub fn read_mesh(path: Option<&Path>, format: Option<&str>) -> Result<Mesh, Failure> {
    let f = mesh_format(format, path, MeshFormat::Obj)?;
    Ok(meshio::parse_mesh(&read_text(path)?, f, ReadOptions::default())?)
}

pub fn write_cloud(cloud: &PointCloud, path: Option<&Path>, format: Option<&str>) -> Result<(), Failure> {
    let f = point_format(format, path, PointFormat::Xyz)?;
    write_text(path, &meshio::format_points(cloud, f))
}

pub fn write_mesh(mesh: &Mesh, path: Option<&Path>, format: Option<&str>) -> Result<(), Failure> {
    let f = mesh_format(format, path, MeshFormat::Obj)?;
    write_text(path, &meshio::format_mesh(mesh, f))
}

/// One instance of a training or ablation dataset.
pub struct Instance {
    pub class: String,
    pub cloud: PointCloud,
    pub reference: Mesh,
}

/// Loads every `<class>_<id>.xyz` in `dir` with its reference mesh
/// `<class>_<id>.obj` (or `.off`, `.ply`), sorted by file name. A stem
/// without an underscore is its own class.
pub fn read_dataset(dir: &Path) -> Result<Vec<Instance>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Data(format!("reading {}: {e}", dir.display())))?;
    let mut clouds: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("xyz"))
        .collect();
    clouds.sort();
    if clouds.is_empty() {
        return Err(Failure::Data(format!("no .xyz clouds in {}", dir.display())));
    }
    clouds
        .iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let class = stem.rsplit_once('_').map_or(stem.as_str(), |(c, _)| c).to_string();
            let reference = ["obj", "off", "ply"]
                .iter()
                .map(|ext| path.with_extension(ext))
                .find(|p| p.exists())
                .ok_or_else(|| Failure::Data(format!("no reference mesh for {}", path.display())))?;
            let cloud = read_cloud(Some(path), None).map_err(|f| Failure::Data(format!("{}: {f}", path.display())))?;
            let reference = read_mesh(Some(&reference), None)
                .map_err(|f| Failure::Data(format!("{}: {f}", reference.display())))?;
            Ok(Instance {
                class,
                cloud,
                reference,
            })
        })
        .collect()
}
