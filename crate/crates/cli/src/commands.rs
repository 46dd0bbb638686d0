use rayon::prelude::*;

use pacs::analytics::{branch_metrics, p_add_closed, scheme_fisher, snr_added, snr_coherent, DEFAULT_DPHI};
use pacs::experiment::{aggregate, run_trials, Branch, RunConfig};
use pacs::fock::cutoff_for;
use pacs::herald::Scheme;
use pacs::table::{Cell, OutputTable};
use pacs::wigner::{wigner_grid, COHERENT_WIGNER_CUTOFF};
use pacs::{Error, PolynomialOrder, PureState};

use crate::args::{Command, ModelKind, Params, StateKind};
use crate::CliError;

const T_FULL: (f64, f64, usize) = (0.0, 1.0, 101);
const G_FULL: (f64, f64, usize) = (1.0, 3.0, 101);

pub fn run(command: &Command) -> Result<OutputTable, CliError> {
    let p = command.params().merged()?;
    let mut table = match command {
        Command::Prob(_) => cmd_prob(&p)?,
        Command::SnrSweep(_) => cmd_snr_sweep(&p)?,
        Command::Distribution(_) => cmd_distribution(&p)?,
        Command::Wigner(_) => cmd_wigner(&p)?,
        Command::Simulate(_) => cmd_simulate(&p)?,
        Command::Fisher(_) => cmd_fisher(&p)?,
    };
    table.set_meta("command", command.name());
    table.set_meta("version", env!("CARGO_PKG_VERSION"));
    echo(&mut table, &p)?;
    Ok(table)
}

fn echo(table: &mut OutputTable, p: &Params) -> Result<(), CliError> {
    let loss = p.loss_spec()?;
    table.set_meta("nbar", p.nbar());
    table.set_meta("theta", p.theta.unwrap_or(0.0));
    table.set_meta("model", format!("{:?}", p.model()).to_lowercase());
    table.set_meta("loss", loss.loss());
    table.set_meta("det_eff", loss.detector_efficiency());
    if let Some(c) = p.cutoff_override {
        table.set_meta("cutoff_override", c);
    }
    Ok(())
}

fn scheme(p: &Params, m: PolynomialOrder, coupling: f64, phi: f64) -> Result<Scheme, CliError> {
    let mut s = Scheme::new(p.nbar(), m, p.addition_model(coupling))?;
    s.theta = p.theta.unwrap_or(0.0);
    s.phi = phi;
    s.loss = p.loss_spec()?;
    s.cutoff_override = p.cutoff_override;
    Ok(s)
}

fn single_phi(p: &Params) -> Result<f64, CliError> {
    if p.phi_min.is_some() || p.phi_max.is_some() || p.phi_steps.is_some() {
        return Err(CliError::Usage("this command takes a single --phi".into()));
    }
    Ok(p.phi.unwrap_or(0.0))
}

fn single_coupling(p: &Params, t: f64, g: f64) -> Result<f64, CliError> {
    match p.couplings((t, t, 1), (g, g, 1))?.as_slice() {
        [v] => Ok(*v),
        _ => Err(CliError::Usage("this command takes a single --t or --gain".into())),
    }
}

fn grid_points<T: Copy + Send + Sync>(ms: &[PolynomialOrder], values: &[T]) -> Vec<(PolynomialOrder, T)> {
    ms.iter().flat_map(|&m| values.iter().map(move |&v| (m, v))).collect()
}

/// Success probability: rows `(model, sweep_value, m, nbar, probability)`,
/// where the sweep value is `R = 1 - T` for the beam splitter and `G` for
/// down-conversion.
pub fn cmd_prob(p: &Params) -> Result<OutputTable, CliError> {
    let ms = p.orders(1)?;
    let values = p.couplings(T_FULL, G_FULL)?;
    let phi = single_phi(p)?;
    let model = p.model();
    let rows: Vec<Vec<Cell>> = grid_points(&ms, &values)
        .into_par_iter()
        .map(|(m, v)| {
            let s = scheme(p, m, v, phi)?;
            let (sweep_value, prob) = match model {
                ModelKind::Bs => (1.0 - v, p_add_closed(m, v, s.nbar_at_addition())?),
                ModelKind::Pdc => (v, s.herald()?.success_probability),
            };
            Ok(vec![
                s.model.name().into(),
                sweep_value.into(),
                m.get().into(),
                p.nbar().into(),
                prob.into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = OutputTable::new(["model", "sweep_value", "m", "nbar", "probability"]);
    for r in rows {
        t.push_row(r)?;
    }
    t.set_meta("phi", phi);
    Ok(t)
}

fn missing_if_divergent(r: pacs::Result<f64>) -> Result<Option<f64>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DivergentSnr) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// SNR figures over the coupling sweep. The SNR ratio is taken against a
/// coherent state carrying the same post-loss light; the failure branch SNR
/// subtracts no photons.
pub fn cmd_snr_sweep(p: &Params) -> Result<OutputTable, CliError> {
    let ms = p.orders(1)?;
    let values = p.couplings(T_FULL, G_FULL)?;
    let phi = single_phi(p)?;
    let model = p.model();
    let rows: Vec<Vec<Cell>> = grid_points(&ms, &values)
        .into_par_iter()
        .map(|(m, v)| {
            let s = scheme(p, m, v, phi)?;
            let nbar_eff = s.nbar_at_addition();
            let herald = s.herald()?;
            let branches = branch_metrics(&herald, m);
            let (snr, prob) = match model {
                ModelKind::Bs => (
                    missing_if_divergent(snr_added(m, v, nbar_eff))?,
                    p_add_closed(m, v, nbar_eff)?,
                ),
                ModelKind::Pdc => (branches.success_snr, herald.success_probability),
            };
            let ratio = snr.filter(|_| nbar_eff > 0.0).map(|x| x / snr_coherent(nbar_eff));
            Ok(vec![
                v.into(),
                m.get().into(),
                snr.into(),
                ratio.into(),
                prob.into(),
                snr.map(|x| prob.sqrt() * x).into(),
                branches.weighted_failure.into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let first = if model == ModelKind::Bs { "T" } else { "G" };
    let mut t = OutputTable::new([
        first,
        "m",
        "snr",
        "snr_ratio",
        "success_probability",
        "weighted_success_metric",
        "weighted_failure_metric",
    ]);
    for r in rows {
        t.push_row(r)?;
    }
    t.set_meta("phi", phi);
    t.set_meta(
        "snr_baseline",
        "coherent state with the post-loss amplitude at the addition stage",
    );
    t.set_meta("failure_snr_offset", "none");
    Ok(t)
}

/// Photon-number distribution `(m, n, p_n)` of the success state for each `m`.
pub fn cmd_distribution(p: &Params) -> Result<OutputTable, CliError> {
    let ms = p.orders(1)?;
    let coupling = single_coupling(p, 1.0, 2.0)?;
    let phi = single_phi(p)?;
    let mut t = OutputTable::new(["m", "n", "p_n"]);
    for m in ms {
        let state = scheme(p, m, coupling, phi)?.added_state()?;
        for (n, pn) in state.number_distribution().into_iter().enumerate() {
            t.push_row(vec![m.get().into(), n.into(), pn.into()])?;
        }
    }
    t.set_meta("coupling", coupling);
    t.set_meta("phi", phi);
    Ok(t)
}

/// Wigner function `(x, p, W)` of a coherent, Fock, or photon-added state.
pub fn cmd_wigner(p: &Params) -> Result<OutputTable, CliError> {
    let kind = p.state.unwrap_or(StateKind::Added);
    let m = p.single_order(1)?;
    let coupling = single_coupling(p, 1.0, 2.0)?;
    let phi = single_phi(p)?;
    let grid = p.phase_grid()?;
    let s = scheme(p, m, coupling, phi)?;
    let state = match kind {
        StateKind::Coherent => {
            let cutoff = COHERENT_WIGNER_CUTOFF.max(2 * cutoff_for(s.nbar_at_addition(), 0));
            PureState::coherent(s.ports().top, cutoff)?
        }
        StateKind::Fock => PureState::fock(m.as_usize(), m.as_usize())?,
        StateKind::Added => s.added_state()?,
    };
    let w = wigner_grid(&state, grid)?;
    let mut t = OutputTable::new(["x", "p", "W"]);
    for i in 0..grid.n_x {
        for j in 0..grid.n_p {
            t.push_row(vec![grid.x(i).into(), grid.p(j).into(), w.get(i, j).into()])?;
        }
    }
    t.set_meta("state", format!("{kind:?}").to_lowercase());
    t.set_meta("m", m.get());
    t.set_meta("coupling", coupling);
    t.set_meta("phi", phi);
    t.set_meta(
        "grid",
        format!(
            "{}:{}:{},{}:{}:{}",
            grid.x_min, grid.x_max, grid.n_x, grid.p_min, grid.p_max, grid.n_p
        ),
    );
    t.set_meta("w_min", format!("{:.16e}", w.min()));
    t.set_meta("w_integral", format!("{:.16e}", w.integral()));
    Ok(t)
}

/// Monte Carlo run per `m`: per-point aggregates, or per-trial records with
/// `--records`.
pub fn cmd_simulate(p: &Params) -> Result<OutputTable, CliError> {
    let seed = p
        .seed
        .ok_or_else(|| CliError::Usage("simulate requires --seed".into()))?;
    let ms = p.orders(1)?;
    let sweep = p.couplings((0.1, 0.9, 9), (1.1, 2.0, 10))?;
    let phi = single_phi(p)?;
    let configs: Vec<RunConfig> = ms
        .iter()
        .map(|&m| {
            let s = scheme(p, m, sweep[0], phi)?;
            let mut c = RunConfig::new(p.nbar(), m, s.model, sweep.clone(), seed);
            c.theta = s.theta;
            c.phi = phi;
            c.loss = s.loss;
            c.trials_per_point = p.trials();
            c.cutoff_override = p.cutoff_override;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<_, CliError>>()?;

    let mut t = if p.records {
        OutputTable::new(["m", "sweep_value", "trial", "branch", "herald_count", "detected_n"])
    } else {
        OutputTable::new([
            "m",
            "sweep_value",
            "trials",
            "kept_count",
            "empirical_success_rate",
            "theory_success_probability",
            "empirical_snr",
            "empirical_snr_ratio",
            "theory_snr_ratio",
        ])
    };
    for c in &configs {
        let m = c.m.get();
        let kept_outcome = if p.model() == ModelKind::Bs { 0 } else { c.m.as_usize() };
        let records = run_trials(c)?;
        if p.records {
            for r in &records {
                let (label, k) = match r.branch {
                    Branch::Success => ("success", kept_outcome),
                    Branch::Failure(k) => ("failure", k),
                };
                t.push_row(vec![
                    m.into(),
                    r.sweep_value.into(),
                    r.trial.into(),
                    label.into(),
                    k.into(),
                    r.detected_n.into(),
                ])?;
            }
        } else {
            for a in aggregate(&records, c)? {
                t.push_row(vec![
                    m.into(),
                    a.sweep_value.into(),
                    a.trials.into(),
                    a.kept_count.into(),
                    a.empirical_success_rate.into(),
                    a.theory_success_probability.into(),
                    a.empirical_snr.into(),
                    a.empirical_snr_ratio.into(),
                    a.theory_snr_ratio.into(),
                ])?;
            }
        }
    }
    t.set_meta("seed", seed);
    t.set_meta("trials_per_point", p.trials());
    t.set_meta("phi", phi);
    t.set_meta(
        "rng",
        "chacha8, stream = (m << 32) | sweep index, word position = trial << 20",
    );
    t.set_meta("snr_offset", "m (success branch)");
    Ok(t)
}

/// Fisher information over a phase sweep at fixed coupling and `m`.
pub fn cmd_fisher(p: &Params) -> Result<OutputTable, CliError> {
    let m = p.single_order(1)?;
    let coupling = single_coupling(p, 0.5, 1.5)?;
    let phis = p.phases((0.1, 3.0, 30))?;
    let dphi = p.dphi.unwrap_or(DEFAULT_DPHI);
    let nu = p.trials.unwrap_or(1);
    let rows: Vec<Vec<Cell>> = phis
        .par_iter()
        .map(|&phi| {
            let r = scheme_fisher(&scheme(p, m, coupling, phi)?, nu, dphi)?;
            Ok(vec![
                phi.into(),
                r.fisher_success.into(),
                r.fisher_failure.into(),
                r.fisher_combined.into(),
                r.fisher_joint.into(),
                r.qcrb.into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = OutputTable::new(["phi", "F_success", "F_failure", "F_combined", "F_joint", "qcrb"]);
    for r in rows {
        t.push_row(r)?;
    }
    t.set_meta("m", m.get());
    t.set_meta("coupling", coupling);
    t.set_meta("dphi", dphi);
    t.set_meta("nu", nu);
    t.set_meta("outcomes", "herald count, top-port count, bottom-port count");
    Ok(t)
}
