//! The session driver behind the command line.
//!
//! A session directory holds the branch file `<prefix>-branch.csv`, point files
//! `<prefix><step>` (every `smod` steps and at the end of a run), bifurcation
//! points `bp<k>`, a log with one line per step, and plots. A lock file keeps
//! concurrent runs out; creating a file named `stop` ends a run after the
//! current step.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::branchfile::{BranchTable, BranchWriter};
use super::config::{Action, RunConfig};
use super::plot::{plot_branches, plot_solution};
use super::pointfile::{load_point, save_point, PointData};
use crate::cont::{
    cont, findbif, meshcheck, pmcont, swibra, tint, BifPoint, BranchRecord, ContOutcome, ContinuationState, Observer,
    PointKind, StepDiagnostics, StopReason,
};
use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::linalg::sparse::norm2;
use crate::problem::{Params, System};
use crate::problems::preset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit status and a one-line summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub code: i32,
    pub message: String,
}

/// Configuration and input problems map to 2, numerical failures to 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::NotFound(_) | Error::Parse { .. } | Error::Corrupt { .. } | Error::Io(_) => EXIT_CONFIG,
        Error::InvalidInput(_) | Error::Mesh(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

struct SessionLock(PathBuf);

impl SessionLock {
    fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("session.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "session {} is in use (remove {} if no run is active)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Everything a run works on.
struct Loaded {
    sys: System,
    state: ContinuationState,
    params: Params,
    bif: Option<BifPoint>,
}

fn load_start(cfg: &RunConfig, from: Option<&Path>) -> Result<Loaded> {
    let pre = preset(&cfg.problem)?;
    match from {
        Some(path) => {
            let p = load_point(&cfg.resolve(path))?;
            if p.problem != cfg.problem {
                return Err(Error::Config(format!(
                    "{} holds a point of '{}', but the config names '{}'",
                    path.display(),
                    p.problem,
                    cfg.problem
                )));
            }
            let mut merged = p.params.clone();
            merged.extend(cfg.params.clone());
            let params = pre.params(&merged)?;
            let sys = System::new((pre.build)(params.clone()), Arc::new(p.mesh));
            let mut state = p.state;
            state.settings = cfg.settings_over(&state.settings)?;
            if let Some(xi) = state.settings.xi {
                state.xi = xi;
            }
            Ok(Loaded {
                sys,
                state,
                params,
                bif: p.bif,
            })
        }
        None => {
            let params = pre.params(&cfg.params)?;
            let mesh = cfg.mesh.build(&cfg.base_dir)?;
            let (sys, mut state) = pre.setup(&params, mesh)?;
            state.settings = cfg.settings_over(&(pre.settings)(&params))?;
            state.ds = state.settings.ds;
            state.xi = state.settings.xi.unwrap_or(state.xi);
            Ok(Loaded {
                sys,
                state,
                params,
                bif: None,
            })
        }
    }
}

fn point_data(problem: &str, params: &Params, mesh: &Mesh, state: &ContinuationState, bif: Option<BifPoint>) -> PointData {
    PointData {
        problem: problem.to_string(),
        params: params.clone(),
        mesh: mesh.clone(),
        state: state.clone(),
        bif,
    }
}

/// Writes branch rows, points and the step log of a running session.
struct SessionObserver {
    dir: PathBuf,
    problem: String,
    params: Params,
    branch: BranchWriter,
    log: File,
    last: Option<StepDiagnostics>,
    saved: Vec<PathBuf>,
}

impl SessionObserver {
    fn new(dir: &Path, problem: &str, params: &Params, sys: &System, prefix: &str) -> Result<Self> {
        let branch = BranchWriter::open(&dir.join(format!("{prefix}-branch.csv")), problem, &sys.problem.output_names())?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join("run.log"))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            problem: problem.to_string(),
            params: params.clone(),
            branch,
            log,
            last: None,
            saved: Vec::new(),
        })
    }

    fn save(&mut self, name: &str, sys: &System, state: &ContinuationState, bif: Option<BifPoint>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        save_point(&path, &point_data(&self.problem, &self.params, sys.mesh(), state, bif))?;
        self.saved.push(path.clone());
        Ok(path)
    }
}

impl Observer for SessionObserver {
    fn on_step(&mut self, sys: &System, state: &ContinuationState, record: &BranchRecord) -> Result<()> {
        self.branch.append(record)?;
        if record.kind == PointKind::Regular {
            let (res, iters) = match self.last.take() {
                Some(d) => (d.residuals.last().copied().unwrap_or(0.0), d.iterations),
                None => (0.0, 0),
            };
            writeln!(
                self.log,
                "{} step={} lam={:.10} |u|={:.6e} res={:.3e} iter={} ds={:.4e} unstable={}",
                state.prefix,
                record.step,
                record.lam,
                norm2(&state.u),
                res,
                iters,
                record.ds,
                record.n_unstable.map_or("-".into(), |n| n.to_string())
            )?;
            let smod = state.settings.smod;
            if smod > 0 && record.step.is_multiple_of(smod) {
                self.save(&format!("{}{}", state.prefix, record.step), sys, state, None)?;
            }
        }
        Ok(())
    }

    fn on_diagnostics(&mut self, _state: &ContinuationState, diag: &StepDiagnostics) -> Result<()> {
        self.last = Some(diag.clone());
        Ok(())
    }

    fn on_bifpoint(&mut self, sys: &System, state: &ContinuationState, bif: &BifPoint) -> Result<()> {
        let mut at = state.clone();
        at.u = bif.u.clone();
        at.lam = bif.lam;
        at.tau = bif.tau.clone();
        at.spectral = None;
        at.det_sign = None;
        let path = self.save(&format!("bp{}", bif.index), sys, &at, Some(bif.clone()))?;
        writeln!(self.log, "bifurcation {} at lam={:.10} -> {}", bif.index, bif.lam, path.display())?;
        Ok(())
    }

    fn on_adapt(&mut self, sys: &System, state: &ContinuationState) -> Result<()> {
        writeln!(
            self.log,
            "mesh adapted at step {}: {} triangles, err={:.3e}",
            state.step,
            sys.mesh().n_triangles(),
            state.err
        )?;
        Ok(())
    }

    fn stop(&mut self, _state: &ContinuationState) -> bool {
        self.dir.join("stop").exists()
    }
}

fn summarize(out: &ContOutcome, state: &ContinuationState) -> RunOutcome {
    let base = format!(
        "{} rows, {} bifurcation point(s), last lambda={:.8}",
        out.records.len(),
        out.bifpoints.len(),
        state.lam
    );
    match &out.stop {
        StopReason::NoConvergence(m) => RunOutcome {
            code: EXIT_NUMERIC,
            message: format!("stopped without convergence ({m}); {base}"),
        },
        other => RunOutcome {
            code: EXIT_OK,
            message: format!("{other:?}; {base}"),
        },
    }
}

fn continue_run(cfg: &RunConfig, dir: &Path, mut l: Loaded, prefix: &str, multi: bool) -> Result<RunOutcome> {
    l.state.prefix = prefix.to_string();
    let mut obs = SessionObserver::new(dir, &cfg.problem, &l.params, &l.sys, prefix)?;
    let run = if multi {
        pmcont(&mut l.sys, &mut l.state, &mut obs)
    } else {
        cont(&mut l.sys, &mut l.state, &mut obs)
    };
    let out = run?;
    obs.save(&format!("{prefix}{}", l.state.step), &l.sys, &l.state, None)?;
    Ok(summarize(&out, &l.state))
}

fn action(cfg: &RunConfig, from_cli: Option<&Path>, ds_cli: Option<f64>) -> Result<RunOutcome> {
    let dir = cfg.session_dir();
    let _lock = SessionLock::acquire(&dir)?;
    let from = from_cli.map(Path::to_path_buf).or_else(|| cfg.args.from.clone());
    let prefix = cfg.args.prefix.clone().unwrap_or_else(|| match cfg.action {
        Action::Swibra => "q".into(),
        _ => "p".into(),
    });
    let start = |from: Option<&Path>| -> Result<Loaded> {
        let mut l = load_start(cfg, from)?;
        if let Some(ds) = ds_cli {
            l.state.ds = ds;
        }
        Ok(l)
    };
    match cfg.action {
        Action::Init => {
            let mut l = start(from.as_deref())?;
            l.state.prefix = prefix.clone();
            crate::cont::init_step(&l.sys, &mut l.state)?;
            let mut obs = SessionObserver::new(&dir, &cfg.problem, &l.params, &l.sys, &prefix)?;
            let rec = crate::cont::run::record(&l.sys, &l.state, PointKind::Regular, &l.state.u, l.state.lam);
            obs.on_step(&l.sys, &l.state, &rec)?;
            let path = obs.save(&format!("{prefix}0"), &l.sys, &l.state, None)?;
            Ok(RunOutcome {
                code: EXIT_OK,
                message: format!("initial point at lambda={} saved to {}", l.state.lam, path.display()),
            })
        }
        Action::Cont | Action::Pmcont => {
            let l = start(from.as_deref())?;
            continue_run(cfg, &dir, l, &prefix, cfg.action == Action::Pmcont)
        }
        Action::Swibra => {
            let bp = cfg
                .args
                .bifpoint
                .clone()
                .or(from)
                .ok_or_else(|| Error::Config("swibra needs args.bifpoint (or --from)".into()))?;
            let l = load_start(cfg, Some(&bp))?;
            let mut bif = l
                .bif
                .clone()
                .ok_or_else(|| Error::Config(format!("{} is not a bifurcation point file", bp.display())))?;
            let ds = ds_cli.or(cfg.args.ds).unwrap_or(l.state.settings.ds);
            let state = swibra(&l.sys, &mut bif, &l.state, ds, l.state.settings.xi)?;
            let mut obs = SessionObserver::new(&dir, &cfg.problem, &l.params, &l.sys, &prefix)?;
            obs.save(&format!("{prefix}0"), &l.sys, &state, Some(bif))?;
            drop(obs);
            continue_run(cfg, &dir, Loaded { state, ..l }, &prefix, false)
        }
        Action::Findbif => {
            let l = start(from.as_deref())?;
            let b = findbif(&l.sys, &l.state)?;
            for (name, st) in [("left", &b.left), ("right", &b.right)] {
                save_point(
                    &dir.join(format!("{prefix}-findbif-{name}")),
                    &point_data(&cfg.problem, &l.params, l.sys.mesh(), st, None),
                )?;
            }
            let msg = format!(
                "instability between lambda={:.8} and lambda={:.8} (unstable {:?} -> {:?}) after {} steps",
                b.left.lam,
                b.right.lam,
                b.left.n_unstable(),
                b.right.n_unstable(),
                b.steps
            );
            std::fs::write(dir.join("findbif.txt"), format!("{msg}\n"))?;
            Ok(RunOutcome {
                code: EXIT_OK,
                message: msg,
            })
        }
        Action::Tint => {
            let l = start(from.as_deref())?;
            let h = cfg.args.tint_h.ok_or_else(|| Error::Config("tint needs args.tint_h".into()))?;
            let n = cfg.args.tint_steps.ok_or_else(|| Error::Config("tint needs args.tint_steps".into()))?;
            let r = tint(&l.sys, &l.state.u, l.state.lam, h, n)?;
            let mut state = l.state.clone();
            state.u = r.u;
            state.restart = true;
            state.spectral = None;
            state.det_sign = None;
            let path = dir.join(format!("{prefix}-tint"));
            save_point(&path, &point_data(&cfg.problem, &l.params, l.sys.mesh(), &state, None))?;
            let mut csv = String::from("# step,|u_k+1 - u_k|\n");
            for (k, d) in r.increments.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", k + 1, d));
            }
            std::fs::write(dir.join(format!("{prefix}-tint.csv")), csv)?;
            Ok(RunOutcome {
                code: EXIT_OK,
                message: format!(
                    "{n} steps of h={h}; last increment {:.3e}; saved {}",
                    r.increments.last().copied().unwrap_or(0.0),
                    path.display()
                ),
            })
        }
        Action::Plot => {
            let files: Vec<PathBuf> = if cfg.args.branches.is_empty() {
                vec![dir.join(format!("{prefix}-branch.csv"))]
            } else {
                cfg.args.branches.iter().map(|p| cfg.resolve(p)).collect()
            };
            let tables: Vec<BranchTable> = files.iter().map(|f| BranchTable::load(f)).collect::<Result<_>>()?;
            let column = match &cfg.args.column {
                Some(c) => c.clone(),
                None => tables
                    .first()
                    .and_then(|t| t.output_names().first().cloned())
                    .unwrap_or_else(|| "lam".into()),
            };
            let svg = plot_branches(&tables, &column)?;
            let out = dir.join(format!("{prefix}-branch.svg"));
            std::fs::write(&out, svg)?;
            let mut msg = format!("wrote {}", out.display());
            if let Some(f) = from {
                let p = load_point(&cfg.resolve(&f))?;
                let comp = cfg.args.component.unwrap_or(1);
                let svg = plot_solution(&p.mesh, &p.state.u, comp)?;
                let stem = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "point".into());
                let out = dir.join(format!("{stem}-u{comp}.svg"));
                std::fs::write(&out, svg)?;
                msg.push_str(&format!(", {}", out.display()));
            }
            Ok(RunOutcome { code: EXIT_OK, message: msg })
        }
        Action::Meshcheck => {
            let mut l = start(from.as_deref())?;
            if from.is_none() {
                let out = crate::cont::newton_fixed_lambda(&l.sys, l.state.u.clone(), l.state.lam, &l.state.settings, None)?;
                if !out.converged {
                    return Err(Error::NoConvergence("meshcheck: initial guess does not converge".into()));
                }
                l.state.u = out.u;
            }
            let r = meshcheck(&l.sys, &l.state)?;
            let comp = cfg.args.component.unwrap_or(1);
            std::fs::write(dir.join(format!("{prefix}-meshcheck-diff.svg")), plot_solution(r.refined.mesh(), &r.diff, comp)?)?;
            let mut refined = l.state.clone();
            refined.u = r.u.clone();
            refined.restart = true;
            refined.spectral = None;
            refined.det_sign = None;
            save_point(
                &dir.join(format!("{prefix}-meshcheck")),
                &point_data(&cfg.problem, &l.params, r.refined.mesh(), &refined, None),
            )?;
            let advice = if r.needs_refinement() {
                "; refine the mesh before continuing"
            } else {
                ""
            };
            Ok(RunOutcome {
                code: EXIT_OK,
                message: format!(
                    "|u_diff|_inf={:.4e}, relative {:.4e} on {} triangles{advice}",
                    r.diff_inf,
                    r.rel_error,
                    r.refined.mesh().n_triangles()
                ),
            })
        }
        Action::Jaccheck => {
            let l = start(from.as_deref())?;
            let r = l.sys.jac_check(&l.state.u, l.state.lam)?;
            let msg = format!(
                "relative Jacobian error e={:.4e} (assembled {:.3}s, finite differences {:.3}s)",
                r.rel_error, r.seconds_assembled, r.seconds_fd
            );
            std::fs::write(dir.join("jaccheck.txt"), format!("{msg}\n"))?;
            Ok(RunOutcome {
                code: EXIT_OK,
                message: msg,
            })
        }
    }
}

/// Runs one configured action; errors become exit codes.
pub fn run(cfg: &RunConfig, from: Option<&Path>, ds: Option<f64>) -> RunOutcome {
    match action(cfg, from, ds) {
        Ok(o) => o,
        Err(e) => RunOutcome {
            code: exit_code(&e),
            message: e.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, action: &str, extra: &str) -> RunConfig {
        let text = format!("problem = \"bratu\"\naction = \"{action}\"\nsession = \"s\"\n[params]\nh = 0.1\n{extra}");
        let mut c = RunConfig::parse(&text).unwrap();
        c.base_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn cont_writes_branch_points_and_log() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), "cont", "[settings]\nnsteps = 4\nsmod = 2\n");
        let out = run(&c, None, None);
        assert_eq!(out.code, EXIT_OK, "{}", out.message);
        let s = dir.path().join("s");
        let t = BranchTable::load(&s.join("p-branch.csv")).unwrap();
        assert_eq!(t.rows.len(), 5);
        for f in ["p2", "p4", "run.log"] {
            assert!(s.join(f).exists(), "{f}");
        }
        assert!(!s.join("session.lock").exists());
        // continuing from p4 backwards appends to the same branch
        let c2 = config(dir.path(), "cont", "[settings]\nnsteps = 2\n");
        let out = run(&c2, Some(Path::new("s/p4")), Some(-0.05));
        assert_eq!(out.code, EXIT_OK, "{}", out.message);
        let t2 = BranchTable::load(&s.join("p-branch.csv")).unwrap();
        assert_eq!(t2.rows.len(), 7);
        assert!(t2.rows[6].lam < t2.rows[4].lam);
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), "cont", "");
        let out = run(&c, Some(Path::new("missing")), None);
        assert_eq!(out.code, EXIT_CONFIG);
        std::fs::create_dir_all(dir.path().join("s")).unwrap();
        std::fs::write(dir.path().join("s/session.lock"), "1").unwrap();
        assert_eq!(run(&c, None, None).code, EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NoConvergence("x".into())), EXIT_NUMERIC);
    }
}
