use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AlignmentResult, CadModel, FormatError};

/// Writes all aligned models into one Wavefront OBJ file, one `o` group per
/// object, vertices placed in world space by each result's pose.
pub fn export_scene_mesh(results: &[AlignmentResult], cad_db: &[CadModel], path: &Path) -> Result<(), FormatError> {
    let mut out = String::from("# mvalign scene export\n");
    let mut offset = 1usize;
    for r in results {
        let model = cad_db.iter().find(|m| m.id == r.cad_model_id).ok_or_else(|| {
            FormatError::DanglingReference(format!(
                "object {} references unknown model {:?}",
                r.object_id, r.cad_model_id
            ))
        })?;
        writeln!(out, "o object_{}_{}", r.object_id, model.id).unwrap();
        for v in &model.vertices {
            let p = r.pose.object_to_world(v);
            writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
        }
        for f in &model.faces {
            writeln!(out, "f {} {} {}", f[0] + offset, f[1] + offset, f[2] + offset).unwrap();
        }
        offset += model.vertices.len();
    }
    fs::write(path, out).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}
