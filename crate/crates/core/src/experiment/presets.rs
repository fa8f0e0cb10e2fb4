//! Named configurations for the figure panels.
//!
//! Panels `a*` start from neighbouring sites, `b*` from a doubly occupied
//! site. Suffix `1` sweeps `delta` at `U = 2`, suffix `2` sweeps `U` at
//! `delta = 0.04`. Figures 1 and 3 export densities, 2 and 4 correlators;
//! 1 and 2 are untilted, 3 and 4 use `F = 0.26`. Figure 5 is the QFI of
//! one boson (`a`) and of both two-boson starts (`b`, `c`).

use crate::error::{Error, Result};
use crate::fock::LatticeParams;
use crate::propagator::{EvolutionSchedule, InitialState};

use super::config::{ExperimentConfig, ObservableSelection, QfiOptions, SweepAxis, SweepParameter};

pub const PRESET_SITES: usize = 70;
pub const PRESET_TILT: f64 = 0.26;
pub const DELTA_SWEEP: [f64; 4] = [0.0, 0.02, 0.04, 0.08];
pub const U_SWEEP: [f64; 4] = [0.0, 2.0, 5.0, 10.0];
const FIXED_U: f64 = 2.0;
const FIXED_DELTA: f64 = 0.04;
const UNTILTED_T_MAX: f64 = 15.0;
const UNTILTED_SNAPSHOTS: usize = 151;
const TILTED_SPACING: f64 = 0.1;

const NAMES: [&str; 19] = [
    "fig1-a1", "fig1-a2", "fig1-b1", "fig1-b2", "fig2-a1", "fig2-a2", "fig2-b1", "fig2-b2",
    "fig3-a1", "fig3-a2", "fig3-b1", "fig3-b2", "fig4-a1", "fig4-a2", "fig4-b1", "fig4-b2",
    "fig5-a", "fig5-b", "fig5-c",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

/// One-line description per preset, for `list-presets`.
pub fn describe(name: &str) -> Result<String> {
    let c = preset(name)?;
    let axis = c
        .sweep
        .iter()
        .map(|a| format!("{} in {:?}", a.parameter, a.values))
        .collect::<Vec<_>>()
        .join(", ");
    let mut what = vec!["density"];
    if c.observables.decomposition {
        what.push("decomposition");
    }
    if c.observables.correlator {
        what.push("correlator");
    }
    if c.observables.qfi.is_some() {
        what.push("qfi");
    }
    Ok(format!(
        "N={} {} delta={} U={} F={}; sweep {}; t_max={:.2}; {}",
        c.params.particles,
        c.initial_state.name(),
        c.params.delta,
        c.params.interaction,
        c.params.tilt,
        axis,
        c.schedule.t_max,
        what.join("+"),
    ))
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let unknown = || {
        Error::config(
            "preset",
            format!("unknown preset `{name}`; valid names: {}", NAMES.join(", ")),
        )
    };
    let (figure, panel) = name.split_once('-').ok_or_else(unknown)?;
    let figure: u8 = figure
        .strip_prefix("fig")
        .and_then(|f| f.parse().ok())
        .filter(|f| (1..=5).contains(f))
        .ok_or_else(unknown)?;

    if figure == 5 {
        let start = match panel {
            "a" => InitialState::SingleCenter,
            "b" => InitialState::Neighboring,
            "c" => InitialState::SameSite,
            _ => return Err(unknown()),
        };
        let params = LatticeParams::new(PRESET_SITES, start.required_particles())
            .with_interaction(FIXED_U)
            .with_tilt(PRESET_TILT);
        return Ok(ExperimentConfig {
            name: Some(name.to_string()),
            initial_state: start,
            output_dir: None,
            workers: 0,
            schedule: EvolutionSchedule::with_spacing(params.bloch_period(), TILTED_SPACING),
            params,
            observables: ObservableSelection {
                qfi: Some(QfiOptions::default()),
                ..ObservableSelection::default()
            },
            sweep: vec![SweepAxis {
                parameter: SweepParameter::Delta,
                values: DELTA_SWEEP.to_vec(),
            }],
        });
    }

    let (start, sweep_u) = match panel {
        "a1" => (InitialState::Neighboring, false),
        "a2" => (InitialState::Neighboring, true),
        "b1" => (InitialState::SameSite, false),
        "b2" => (InitialState::SameSite, true),
        _ => return Err(unknown()),
    };
    let tilted = figure >= 3;
    let correlator = figure.is_multiple_of(2);
    let mut params = LatticeParams::new(PRESET_SITES, 2);
    if tilted {
        params = params.with_tilt(PRESET_TILT);
    }
    let sweep = if sweep_u {
        params = params.with_delta(FIXED_DELTA);
        SweepAxis {
            parameter: SweepParameter::U,
            values: U_SWEEP.to_vec(),
        }
    } else {
        params = params.with_interaction(FIXED_U);
        SweepAxis {
            parameter: SweepParameter::Delta,
            values: DELTA_SWEEP.to_vec(),
        }
    };
    let schedule = if tilted {
        EvolutionSchedule::with_spacing(2.0 * params.bloch_period(), TILTED_SPACING)
    } else {
        EvolutionSchedule::new(UNTILTED_T_MAX, UNTILTED_SNAPSHOTS)
    };
    Ok(ExperimentConfig {
        name: Some(name.to_string()),
        initial_state: start,
        output_dir: None,
        workers: 0,
        params,
        schedule,
        observables: ObservableSelection {
            decomposition: true,
            correlator,
            ..ObservableSelection::default()
        },
        sweep: vec![sweep],
    })
}
