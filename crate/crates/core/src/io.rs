//! Plain-text artifacts: structured-grid dumps of meshes, flow fields and
//! tabulated force potentials, plus the CSV outputs of the studies.
//!
//! All floating-point values are written as shortest round-trip decimals
//! (Rust's `{:?}` formatting), so reading a dump back reproduces every
//! array bit for bit. The exact layouts live in `docs/formats.md`.

use crate::error::{Error, Result};
use crate::force::{ForceField, ForceKind};
use crate::gas::GasModel;
use crate::geometry::{
    build_mesh, build_profile, MeridianMesh, Obstacle, ProfileKind, Symmetry,
};
use crate::solvers::{FlowState, SolverDiagnostics};
use crate::Scalar;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

const MAGIC: &str = "nozzleflow-field v1";

fn fmt<T: Scalar>(v: T) -> Result<String> {
    let x = v.to_f64().ok_or_else(|| {
        Error::Format("value not representable as f64 for serialization".to_string())
    })?;
    if !x.is_finite() {
        return Err(Error::Format(format!("non-finite value {x} in dump")));
    }
    Ok(format!("{x:?}"))
}

fn header_lines<T: Scalar>(mesh: &MeridianMesh<T>) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    let sym = match mesh.symmetry {
        Symmetry::Axisymmetric => "axisymmetric",
        Symmetry::Planar => "planar",
    };
    writeln!(s, "symmetry {sym}").unwrap();
    writeln!(s, "transverse_cells {}", mesh.n_s).unwrap();
    writeln!(s, "axial_cells {}", mesh.n_z).unwrap();
    writeln!(s, "half_length {}", fmt(mesh.half_length)?).unwrap();
    match mesh.profile.kind {
        ProfileKind::Cylinder => writeln!(s, "profile cylinder").unwrap(),
        ProfileKind::FlatBeyondK {
            amplitude,
            center,
            width,
        } => writeln!(
            s,
            "profile flat_beyond_k {} {} {}",
            fmt(amplitude)?,
            fmt(center)?,
            fmt(width)?
        )
        .unwrap(),
        ProfileKind::Algebraic { a1, amplitude } => {
            writeln!(s, "profile algebraic {} {}", fmt(a1)?, fmt(amplitude)?).unwrap()
        }
    }
    writeln!(s, "profile_k {}", fmt(mesh.profile.k)?).unwrap();
    match &mesh.profile.obstacle {
        None => writeln!(s, "obstacle none").unwrap(),
        Some(b) => writeln!(
            s,
            "obstacle bump {} {} {}",
            fmt(b.height)?,
            fmt(b.l1)?,
            fmt(b.l2)?
        )
        .unwrap(),
    }
    Ok(s)
}

fn write_block<T: Scalar>(out: &mut String, name: &str, rows: &[&[T]]) -> Result<()> {
    let count: usize = rows.iter().map(|r| r.len()).sum();
    writeln!(out, "block {name} {count}").unwrap();
    for row in rows {
        let mut line = String::new();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&fmt(*v)?);
        }
        writeln!(out, "{line}").unwrap();
    }
    Ok(())
}

fn node_rows<'a, T: Scalar>(mesh: &MeridianMesh<T>, values: &'a [T]) -> Vec<&'a [T]> {
    let stride = mesh.n_s + 1;
    (0..=mesh.n_z)
        .map(|j| &values[j * stride..(j + 1) * stride])
        .collect()
}

fn cell_rows<'a, T: Scalar>(mesh: &MeridianMesh<T>, values: &'a [T]) -> Vec<&'a [T]> {
    let stride = mesh.n_s;
    (0..mesh.n_z)
        .map(|j| &values[j * stride..(j + 1) * stride])
        .collect()
}

/// Writes the mesh dump: header, stations and node radii.
pub fn write_mesh<T: Scalar>(mesh: &MeridianMesh<T>, path: &Path) -> Result<()> {
    let mut s = header_lines(mesh)?;
    write_block(&mut s, "stations", &[&mesh.stations])?;
    write_block(&mut s, "node_r", &node_rows(mesh, &mesh.radii))?;
    s.push_str("end\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes the full field dump: mesh blocks, one block per field, and a
/// key-value diagnostics footer.
pub fn write_field<T: Scalar>(state: &FlowState<T>, path: &Path) -> Result<()> {
    let mesh = &state.mesh;
    let mut s = header_lines(mesh)?;
    writeln!(
        s,
        "gas {} {} {} {}",
        fmt(state.gas.gamma)?,
        fmt(state.gas.epsilon)?,
        fmt(state.gas.theta)?,
        fmt(state.gas.epsilon0)?
    )
    .unwrap();
    match &state.force.kind {
        ForceKind::Zero => writeln!(s, "force zero").unwrap(),
        ForceKind::RadialStatic { amplitude } => {
            writeln!(s, "force radial_static {}", fmt(*amplitude)?).unwrap()
        }
        ForceKind::DecayingPerturbation {
            base,
            amplitude,
            b1,
            k,
        } => writeln!(
            s,
            "force decaying {} {} {} {}",
            fmt(*base)?,
            fmt(*amplitude)?,
            fmt(*b1)?,
            fmt(*k)?
        )
        .unwrap(),
        // tabulated potentials are not rehydrated from field dumps
        ForceKind::Tabulated(_) => writeln!(s, "force tabulated").unwrap(),
    }
    writeln!(s, "mass_flux {}", fmt(state.mass_flux_target)?).unwrap();
    writeln!(s, "achieved_flux {}", fmt(state.achieved_flux)?).unwrap();
    writeln!(s, "inlet_datum {}", fmt(state.inlet_datum)?).unwrap();

    write_block(&mut s, "stations", &[&mesh.stations])?;
    write_block(&mut s, "node_r", &node_rows(mesh, &mesh.radii))?;
    write_block(&mut s, "potential", &node_rows(mesh, &state.potential))?;
    write_block(&mut s, "u_r", &cell_rows(mesh, &state.u_r))?;
    write_block(&mut s, "u_z", &cell_rows(mesh, &state.u_z))?;
    write_block(&mut s, "rho", &cell_rows(mesh, &state.density))?;
    write_block(&mut s, "mach", &cell_rows(mesh, &state.mach))?;
    write_block(&mut s, "pressure", &cell_rows(mesh, &state.pressure))?;
    s.push_str("footer\n");
    writeln!(
        s,
        "velocity_floor {}",
        fmt(state.diagnostics.velocity_floor)?
    )
    .unwrap();
    writeln!(s, "truncated_cells {}", state.diagnostics.truncated_cells).unwrap();
    writeln!(s, "max_mach {}", fmt(state.diagnostics.max_mach)?).unwrap();
    s.push_str("end\n");
    std::fs::write(path, s)?;
    Ok(())
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().peekable(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Format("unexpected end of file".to_string()))
    }

    fn expect_key(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        if head != key {
            return Err(Error::Format(format!(
                "line {}: expected '{key}', found '{head}'",
                self.line_no
            )));
        }
        Ok(parts.collect())
    }

    fn scalar_key(&mut self, key: &str) -> Result<f64> {
        let args = self.expect_key(key)?;
        let token = args
            .first()
            .copied()
            .ok_or_else(|| Error::Format(format!("'{key}' lacks a value")))?;
        self.parse_f64(token)
    }

    fn parse_f64(&self, token: &str) -> Result<f64> {
        token.parse::<f64>().map_err(|_| {
            Error::Format(format!("line {}: bad number '{token}'", self.line_no))
        })
    }

    fn read_block(&mut self, name: &str) -> Result<Vec<f64>> {
        let args = self.expect_key("block").map_err(|_| {
            Error::Format(format!("missing block '{name}'"))
        })?;
        if args.first().copied() != Some(name) {
            return Err(Error::Format(format!(
                "missing block '{name}' (found '{}')",
                args.first().copied().unwrap_or("")
            )));
        }
        let count: usize = args
            .get(1)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format(format!("block '{name}' lacks a count")))?;
        let mut values = Vec::with_capacity(count);
        while values.len() < count {
            let line = self.next_line()?;
            for token in line.split_whitespace() {
                values.push(self.parse_f64(token)?);
            }
        }
        if values.len() != count {
            return Err(Error::Format(format!(
                "block '{name}' holds {} values, expected {count}",
                values.len()
            )));
        }
        Ok(values)
    }
}

struct Header {
    symmetry: Symmetry,
    n_s: usize,
    n_z: usize,
    half_length: f64,
    profile_kind: ProfileKind<f64>,
    profile_k: f64,
    obstacle: Option<Obstacle<f64>>,
}

fn parse_header(parser: &mut Parser) -> Result<Header> {
    let magic = parser.next_line()?;
    if magic.trim() != MAGIC {
        return Err(Error::Format(format!(
            "not a field dump (expected '{MAGIC}', found '{magic}')"
        )));
    }
    let sym = parser.expect_key("symmetry")?;
    let symmetry = match sym.first().copied() {
        Some("axisymmetric") => Symmetry::Axisymmetric,
        Some("planar") => Symmetry::Planar,
        other => {
            return Err(Error::Format(format!(
                "unknown symmetry '{}'",
                other.unwrap_or("")
            )))
        }
    };
    let n_s: usize = parser.expect_key("transverse_cells")?[0]
        .parse()
        .map_err(|_| Error::Format("bad transverse_cells".to_string()))?;
    let n_z: usize = parser.expect_key("axial_cells")?[0]
        .parse()
        .map_err(|_| Error::Format("bad axial_cells".to_string()))?;
    let half_length = parser.scalar_key("half_length")?;
    let profile_args = parser.expect_key("profile")?;
    let profile_kind = match profile_args.first().copied() {
        Some("cylinder") => ProfileKind::Cylinder,
        Some("flat_beyond_k") => ProfileKind::FlatBeyondK {
            amplitude: parser.parse_f64(profile_args[1])?,
            center: parser.parse_f64(profile_args[2])?,
            width: parser.parse_f64(profile_args[3])?,
        },
        Some("algebraic") => ProfileKind::Algebraic {
            a1: parser.parse_f64(profile_args[1])?,
            amplitude: parser.parse_f64(profile_args[2])?,
        },
        other => {
            return Err(Error::Format(format!(
                "unknown profile kind '{}'",
                other.unwrap_or("")
            )))
        }
    };
    let profile_k = parser.scalar_key("profile_k")?;
    let obstacle_args = parser.expect_key("obstacle")?;
    let obstacle = match obstacle_args.first().copied() {
        Some("none") => None,
        Some("bump") => Some(Obstacle {
            height: parser.parse_f64(obstacle_args[1])?,
            l1: parser.parse_f64(obstacle_args[2])?,
            l2: parser.parse_f64(obstacle_args[3])?,
        }),
        other => {
            return Err(Error::Format(format!(
                "unknown obstacle '{}'",
                other.unwrap_or("")
            )))
        }
    };
    Ok(Header {
        symmetry,
        n_s,
        n_z,
        half_length,
        profile_kind,
        profile_k,
        obstacle,
    })
}

fn rebuild_mesh(header: &Header) -> Result<Arc<MeridianMesh<f64>>> {
    let profile = build_profile(header.profile_kind, header.obstacle, header.profile_k)?;
    let h_z = 2.0 * header.half_length / header.n_z as f64;
    let mesh = build_mesh(
        &profile,
        header.half_length,
        header.n_s,
        h_z,
        header.symmetry,
    )?;
    if mesh.n_z != header.n_z {
        return Err(Error::Format(format!(
            "axial cell count {} does not reproduce the dump's {}",
            mesh.n_z, header.n_z
        )));
    }
    Ok(Arc::new(mesh))
}

fn verify_geometry(mesh: &MeridianMesh<f64>, stations: &[f64], radii: &[f64]) -> Result<()> {
    if stations != mesh.stations.as_slice() {
        return Err(Error::Format(
            "stored stations do not match the rebuilt mesh".to_string(),
        ));
    }
    if radii != mesh.radii.as_slice() {
        return Err(Error::Format(
            "stored node radii do not match the rebuilt mesh".to_string(),
        ));
    }
    Ok(())
}

/// Reads a mesh dump.
pub fn read_mesh(path: &Path) -> Result<Arc<MeridianMesh<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut parser = Parser::new(&text);
    let header = parse_header(&mut parser)?;
    let mesh = rebuild_mesh(&header)?;
    let stations = parser.read_block("stations")?;
    let radii = parser.read_block("node_r")?;
    verify_geometry(&mesh, &stations, &radii)?;
    Ok(mesh)
}

/// Reads a field dump back into a flow state. The mesh is rebuilt from the
/// header and checked bitwise against the stored coordinates; a tabulated
/// force is not rehydrated (the state gets a zero force).
pub fn read_field(path: &Path) -> Result<FlowState<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut parser = Parser::new(&text);
    let header = parse_header(&mut parser)?;

    let gas_args = parser.expect_key("gas")?;
    let gas = GasModel::new(
        parser.parse_f64(gas_args[0])?,
        parser.parse_f64(gas_args[1])?,
        parser.parse_f64(gas_args[2])?,
        parser.parse_f64(gas_args[3])?,
    )?;
    let force_args = parser.expect_key("force")?;
    let force = match force_args.first().copied() {
        Some("zero") => ForceField::zero(),
        Some("radial_static") => ForceField::radial_static(parser.parse_f64(force_args[1])?),
        Some("decaying") => ForceField::decaying_perturbation(
            parser.parse_f64(force_args[1])?,
            parser.parse_f64(force_args[2])?,
            parser.parse_f64(force_args[3])?,
            parser.parse_f64(force_args[4])?,
        )?,
        Some("tabulated") => ForceField::zero(),
        other => {
            return Err(Error::Format(format!(
                "unknown force kind '{}'",
                other.unwrap_or("")
            )))
        }
    };
    let m0 = parser.scalar_key("mass_flux")?;
    let achieved = parser.scalar_key("achieved_flux")?;
    let datum = parser.scalar_key("inlet_datum")?;

    let mesh = rebuild_mesh(&header)?;
    let stations = parser.read_block("stations")?;
    let radii = parser.read_block("node_r")?;
    verify_geometry(&mesh, &stations, &radii)?;

    let n_nodes = mesh.node_count();
    let n_cells = mesh.cell_count();
    let potential = parser.read_block("potential")?;
    let u_r = parser.read_block("u_r")?;
    let u_z = parser.read_block("u_z")?;
    let density = parser.read_block("rho")?;
    let mach = parser.read_block("mach")?;
    let pressure = parser.read_block("pressure")?;
    for (name, len, expected) in [
        ("potential", potential.len(), n_nodes),
        ("u_r", u_r.len(), n_cells),
        ("u_z", u_z.len(), n_cells),
        ("rho", density.len(), n_cells),
        ("mach", mach.len(), n_cells),
        ("pressure", pressure.len(), n_cells),
    ] {
        if len != expected {
            return Err(Error::Format(format!(
                "block '{name}' holds {len} values, mesh expects {expected}"
            )));
        }
    }

    parser.expect_key("footer")?;
    let mut diagnostics = SolverDiagnostics::<f64>::default();
    diagnostics.velocity_floor = parser.scalar_key("velocity_floor")?;
    diagnostics.truncated_cells = parser.expect_key("truncated_cells")?[0]
        .parse()
        .map_err(|_| Error::Format("bad truncated_cells".to_string()))?;
    diagnostics.max_mach = parser.scalar_key("max_mach")?;

    Ok(FlowState {
        mesh,
        gas,
        force: Arc::new(force),
        potential,
        u_r,
        u_z,
        density,
        mach,
        pressure,
        mass_flux_target: m0,
        achieved_flux: achieved,
        inlet_datum: datum,
        diagnostics,
    })
}

/// Reads a field dump and checks it lives on the given mesh.
pub fn read_field_for_mesh(path: &Path, mesh: &MeridianMesh<f64>) -> Result<FlowState<f64>> {
    let state = read_field(path)?;
    if state.mesh.n_s != mesh.n_s
        || state.mesh.n_z != mesh.n_z
        || (state.mesh.half_length - mesh.half_length).abs() > 1e-12
    {
        return Err(Error::Format(format!(
            "mesh mismatch: dump is {}x{} over [-{}, {}], expected {}x{} over [-{}, {}]",
            state.mesh.n_s,
            state.mesh.n_z,
            state.mesh.half_length,
            state.mesh.half_length,
            mesh.n_s,
            mesh.n_z,
            mesh.half_length,
            mesh.half_length
        )));
    }
    Ok(state)
}

/// Writes a tabulated force potential aligned with a mesh dump.
pub fn write_tabulated_force<T: Scalar>(
    mesh: &MeridianMesh<T>,
    values: &[T],
    path: &Path,
) -> Result<()> {
    if values.len() != mesh.node_count() {
        return Err(Error::Usage(format!(
            "potential table needs {} node values, got {}",
            mesh.node_count(),
            values.len()
        )));
    }
    let mut s = header_lines(mesh)?;
    write_block(&mut s, "stations", &[&mesh.stations])?;
    write_block(&mut s, "node_r", &node_rows(mesh, &mesh.radii))?;
    write_block(&mut s, "phi", &node_rows(mesh, values))?;
    s.push_str("end\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a tabulated force potential and binds it to the given mesh.
pub fn read_tabulated_force(path: &Path, mesh: &MeridianMesh<f64>) -> Result<ForceField<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut parser = Parser::new(&text);
    let header = parse_header(&mut parser)?;
    if header.n_s != mesh.n_s || header.n_z != mesh.n_z {
        return Err(Error::Format(format!(
            "tabulated potential is {}x{}, mesh is {}x{}",
            header.n_s, header.n_z, mesh.n_s, mesh.n_z
        )));
    }
    let stations = parser.read_block("stations")?;
    let radii = parser.read_block("node_r")?;
    verify_geometry(mesh, &stations, &radii)?;
    let values = parser.read_block("phi")?;
    ForceField::tabulated(mesh, values)
}

/// Writes the per-window far-field samples.
pub fn write_rates_csv<T: Scalar>(fit: &crate::analysis::RateFit<T>, path: &Path) -> Result<()> {
    let mut s = String::from("T,D_L2,D_Linf\n");
    for w in &fit.windows {
        writeln!(s, "{},{},{}", fmt(w.t)?, fmt(w.d_l2)?, fmt(w.d_linf)?).unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes the per-parameter study records.
pub fn write_study_csv<T: Scalar>(
    report: &crate::analysis::StudyReport<T>,
    path: &Path,
) -> Result<()> {
    let mut s = String::from("parameter,velocity_dev,density_dev,excluded\n");
    for r in &report.records {
        let dv = if r.excluded {
            "nan".to_string()
        } else {
            fmt(r.velocity_deviation)?
        };
        let dd = match r.density_deviation {
            Some(d) => fmt(d)?,
            None => String::new(),
        };
        writeln!(s, "{},{dv},{dd},{}", fmt(r.parameter)?, r.excluded).unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Appends lines to a manifest file being built up during a run.
pub fn append_lines(path: &Path, lines: &str) -> Result<()> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    f.write_all(lines.as_bytes())?;
    Ok(())
}
