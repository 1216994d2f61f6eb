//! Ready-made problems with their default meshes, settings and start points.

pub mod ac;
pub mod bratu;
pub mod chemtax;
pub mod common;
pub mod fourier;
pub mod schnak;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cont::{ContinuationState, Settings};
use crate::error::{Error, Result};
use crate::fem::{make_rect_mesh, Mesh};
use crate::problem::{Params, ProblemDef, System};

pub use fourier::{fourier_summary, AxisSpectrum, FourierSummary, GridLayout};

/// A structured rectangle `[−lx, lx] × [−ly, ly]` with `nx × ny` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        make_rect_mesh(self.lx, self.ly, self.nx, self.ny)
    }

    /// Node counts giving a spacing of at most `h`.
    pub fn with_spacing(lx: f64, ly: f64, h: f64) -> Self {
        let count = |l: f64| (2.0 * l / h).ceil() as usize + 1;
        Self {
            lx,
            ly,
            nx: count(lx),
            ny: count(ly),
        }
    }
}

/// A named problem factory.
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: fn() -> Params,
    pub build: fn(Params) -> Arc<dyn ProblemDef>,
    pub mesh: fn(&Params) -> MeshSpec,
    pub settings: fn(&Params) -> Settings,
    /// Initial guess and `λ₀` on the given system.
    pub start: fn(&System, &Params) -> (Vec<f64>, f64),
}

impl std::fmt::Debug for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Preset({})", self.name)
    }
}

impl Preset {
    /// Defaults overridden by `given`; unknown names are an error.
    pub fn params(&self, given: &Params) -> Result<Params> {
        common::merge_params((self.defaults)(), given, self.name)
    }

    /// The problem on the default mesh (or `mesh`), with its start state.
    pub fn setup(&self, given: &Params, mesh: Option<Mesh>) -> Result<(System, ContinuationState)> {
        let params = self.params(given)?;
        let mesh = match mesh {
            Some(m) => m,
            None => (self.mesh)(&params).build()?,
        };
        let sys = System::new((self.build)(params.clone()), Arc::new(mesh));
        let (u, lam) = (self.start)(&sys, &params);
        let state = ContinuationState::new(u, lam, (self.settings)(&params), sys.n_points());
        Ok((sys, state))
    }
}

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn nodal(sys: &System, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    sys.mesh().points().iter().map(|&p| f(p)).collect()
}

fn ac_defaults() -> Params {
    params(&[("mu", 0.25), ("Lx", 1.0), ("Ly", 0.9), ("qs", 1e3), ("h", 0.05)])
}

fn ac_mesh(p: &Params) -> MeshSpec {
    MeshSpec::with_spacing(p["Lx"], p["Ly"], p["h"])
}

fn ac_settings(_: &Params) -> Settings {
    Settings {
        ds: 0.1,
        dsmax: 0.2,
        dlammax: 0.2,
        lammax: 4.0,
        nsteps: 60,
        neig: 10,
        ..Settings::default()
    }
}

fn trivial_start(lam: f64) -> impl Fn(&System, &Params) -> (Vec<f64>, f64) {
    move |sys, _| (vec![0.0; sys.ndof()], lam)
}

/// Smooth plateau of height `a` that vanishes on the boundary of `[−lx,lx] × [−ly,ly]`.
fn plateau(a: f64, lx: f64, ly: f64, width: f64) -> impl Fn([f64; 2]) -> f64 {
    move |p| {
        let layer = |s: f64, l: f64| ((l - s) / width).tanh() * ((l + s) / width).tanh();
        a * layer(p[0], lx) * layer(p[1], ly)
    }
}

static PRESETS: &[Preset] = &[
    Preset {
        name: "bratu",
        summary: "-Δu - 10(u - λe^u) = 0 on the unit square, Neumann",
        defaults: || params(&[("h", 0.05)]),
        build: |_| Arc::new(bratu::Bratu::new()),
        mesh: |p| MeshSpec::with_spacing(0.5, 0.5, p["h"]),
        settings: |_| Settings {
            dlammax: 0.02,
            lammin: 0.02,
            ds: 0.05,
            nsteps: 100,
            ..Settings::default()
        },
        start: |sys, _| (vec![0.1; sys.ndof()], 0.2),
    },
    Preset {
        name: "ac",
        summary: "-μΔu - λu - u³ + u⁵ = 0, Dirichlet",
        defaults: ac_defaults,
        build: |p| Arc::new(ac::AllenCahn::new(p)),
        mesh: ac_mesh,
        settings: ac_settings,
        start: |sys, p| trivial_start(0.5)(sys, p),
    },
    Preset {
        name: "ac-mu",
        summary: "Allen-Cahn continued in the diffusion coefficient",
        defaults: || {
            let mut p = ac_defaults();
            p.remove("mu");
            p.insert("lam_frozen".into(), 2.0);
            p
        },
        build: |p| Arc::new(ac::AllenCahnMu::new(p)),
        mesh: ac_mesh,
        settings: |_| Settings {
            jsw: 1,
            parasw: 0,
            xi: Some(1e-6),
            ds: -0.01,
            dsmax: 0.02,
            lammin: 0.05,
            nsteps: 30,
            bifchecksw: 0,
            spcalcsw: false,
            ..Settings::default()
        },
        start: |sys, p| {
            let (lx, ly) = (p["Lx"], p["Ly"]);
            let u = nodal(sys, |q| 1.2 * (PI * q[0] / (2.0 * lx)).cos() * (PI * q[1] / (2.0 * ly)).cos());
            (u, 0.25)
        },
    },
    Preset {
        name: "ac-ql",
        summary: "-∇·[(0.25 + δu + γu²)∇u] - λu - u³ + u⁵ = 0, Dirichlet",
        defaults: || {
            let mut p = ac_defaults();
            p.remove("mu");
            p.insert("delta".into(), -0.2);
            p.insert("gamma".into(), 0.05);
            p
        },
        build: |p| Arc::new(ac::AllenCahnQuasilinear::new(p)),
        mesh: ac_mesh,
        settings: ac_settings,
        start: |sys, p| trivial_start(0.5)(sys, p),
    },
    Preset {
        name: "ac-gc",
        summary: "-0.1Δu - u - u³ + u⁵ - λ∫u = 0 on [-π/2, π/2]², Dirichlet",
        defaults: || params(&[("qs", 1e3), ("h", 0.1)]),
        build: |p| Arc::new(ac::AllenCahnGlobal::new(p)),
        mesh: |p| MeshSpec::with_spacing(PI / 2.0, PI / 2.0, p["h"]),
        settings: |_| Settings {
            ds: 0.05,
            dlammax: 0.05,
            lammax: 1.0,
            nsteps: 20,
            bifchecksw: 0,
            spcalcsw: false,
            ..Settings::default()
        },
        start: |sys, _| {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (nodal(sys, plateau(golden.sqrt(), PI / 2.0, PI / 2.0, 0.3)), 0.0)
        },
    },
    Preset {
        name: "chemtax",
        summary: "chemotaxis with cross diffusion on a 1x4 rectangle, Neumann",
        defaults: || params(&[("D", 0.25), ("r", 1.52), ("Lx", 1.0), ("Ly", 4.0), ("nx", 18.0), ("ny", 71.0)]),
        build: |p| Arc::new(chemtax::Chemotaxis::new(p)),
        mesh: |p| MeshSpec {
            lx: p["Lx"] / 2.0,
            ly: p["Ly"] / 2.0,
            nx: p["nx"] as usize,
            ny: p["ny"] as usize,
        },
        settings: |_| Settings {
            jsw: 3,
            ds: 0.1,
            dsmax: 0.2,
            dlammax: 0.2,
            lammax: 14.5,
            nsteps: 60,
            neig: 10,
            ..Settings::default()
        },
        start: |sys, _| {
            let np = sys.n_points();
            let mut u = vec![1.0; 2 * np];
            u[np..].iter_mut().for_each(|v| *v = 0.5);
            (u, 11.0)
        },
    },
    Preset {
        name: "schnak",
        summary: "Schnakenberg Turing system on a stripe/hexagon cell, Neumann",
        defaults: || params(&[("d", 60.0), ("m", 1.0), ("n", 1.0), ("delta_def", 0.97), ("h", 0.35)]),
        build: |p| Arc::new(schnak::Schnakenberg::new(p)),
        mesh: |p| {
            let (lx, ly) = schnak::domain_half_widths(p["d"], p["m"], p["n"], p["delta_def"]);
            MeshSpec::with_spacing(lx, ly, p["h"])
        },
        settings: |_| Settings {
            ds: -0.05,
            dsmax: 0.1,
            dlammax: 0.05,
            lammin: 2.0,
            nsteps: 40,
            neig: 10,
            ..Settings::default()
        },
        start: |sys, _| {
            let lam = 3.5;
            let np = sys.n_points();
            let mut u = vec![lam; 2 * np];
            u[np..].iter_mut().for_each(|v| *v = 1.0 / lam);
            (u, lam)
        },
    },
];

pub fn presets() -> &'static [Preset] {
    PRESETS
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::NotFound(format!("problem '{name}' (known: {})", known.join(", ")))
    })
}
