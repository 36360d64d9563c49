//! Legacy ASCII VTK export of a velocity/pressure pair.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fmt::c_exp;

use super::space::{FEField, FieldKind};

/// Unstructured grid of the mesh triangles with vertex velocities as point
/// data and the element-mean pressure as cell data.
pub fn to_vtk(velocity: &FEField, pressure: Option<&FEField>) -> Result<String> {
    let space = velocity.space();
    velocity.expect(space, FieldKind::Velocity)?;
    if let Some(p) = pressure {
        p.expect(space, FieldKind::Pressure)?;
    }
    let mesh = space.mesh();
    let (nv, nt) = (mesh.num_vertices(), mesh.num_triangles());
    let ns = space.n_scalar();
    let f = |v: f64| c_exp(v, 9);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nsteady Navier-Stokes solution\nASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", f(v[0]), f(v[1]), f(0.0));
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    s.push_str("VECTORS velocity double\n");
    let c = velocity.coeffs();
    for v in 0..nv {
        let _ = writeln!(s, "{} {} {}", f(c[v]), f(c[ns + v]), f(0.0));
    }
    if let Some(p) = pressure {
        let _ = writeln!(s, "CELL_DATA {nt}");
        s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
        for t in 0..nt {
            let mean = p.coeffs()[3 * t..3 * t + 3].iter().sum::<f64>() / 3.0;
            let _ = writeln!(s, "{}", f(mean));
        }
    }
    Ok(s)
}

pub fn write_vtk(
    path: impl AsRef<Path>,
    velocity: &FEField,
    pressure: Option<&FEField>,
) -> Result<()> {
    std::fs::write(path, to_vtk(velocity, pressure)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::{interpolate_pressure, interpolate_velocity, MixedSpace};
    use crate::mesh::uniform_square_mesh;
    use std::sync::Arc;

    #[test]
    fn layout() {
        let s = MixedSpace::new(Arc::new(uniform_square_mesh(1).unwrap()));
        let u = interpolate_velocity(&s, |x, y| [x, y]);
        let p = interpolate_pressure(&s, |_, _| 2.0);
        let text = to_vtk(&u, Some(&p)).unwrap();
        assert!(text.contains("POINTS 4 double\n"));
        assert!(text.contains("CELLS 2 8\n"));
        assert!(text.contains("1.000000000e+00 1.000000000e+00 0.000000000e+00\n"));
        assert!(text.ends_with("2.000000000e+00\n"));
    }
}
