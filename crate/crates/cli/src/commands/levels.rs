//! `cstsim levels`: level tables for both manifolds versus field, transition
//! frequencies, and the resonance fields of a given drive.

use super::{parse_axis, parse_grid, parse_zfs, thread_cap, write_or_stdout, CliError, CommonOpts};
use crate::config::Config;
use crate::output::ResultEnvelope;
use cstsim_core::levels::{
    d_e_of_temperature, eigenlevels, resonance_fields, HamiltonianParams, SpinProjection,
};
use cstsim_core::parallel::map_indexed;
use serde::Serialize;

#[derive(Serialize)]
pub struct LevelRow {
    pub manifold: String,
    pub b_mt: f64,
    /// Energies ordered by label: -3/2, -1/2, +1/2, +3/2 (MHz).
    pub energies_mhz: [f64; 4],
    /// |E_a - E_b| for pairs in the fixed order
    /// (-3/2,-1/2), (-3/2,+1/2), (-3/2,+3/2), (-1/2,+1/2), (-1/2,+3/2), (+1/2,+3/2).
    pub transition_mhz: [f64; 6],
}

#[derive(Serialize)]
pub struct ResonanceRow {
    pub manifold: String,
    pub from: String,
    pub to: String,
    pub delta_m: i32,
    pub b_mt: f64,
    pub f_mhz: f64,
}

#[derive(Serialize)]
pub struct LevelsPayload {
    pub kind: String,
    pub rows: Vec<LevelRow>,
    pub resonances: Vec<ResonanceRow>,
}

const LABEL_ORDER: [SpinProjection; 4] = [
    SpinProjection::MinusThreeHalf,
    SpinProjection::MinusHalf,
    SpinProjection::PlusHalf,
    SpinProjection::PlusThreeHalf,
];

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn run(cfg: &mut Config, opts: &CommonOpts) -> Result<(), CliError> {
    let zfs = parse_zfs(cfg)?;
    let temperature = cfg.require_f64("levels", "temperature_k")?;
    let g_factor = cfg.f64_or("levels", "g_factor", 2.0)?;
    let axis = parse_axis(cfg, "levels")?;
    let grid = parse_grid(cfg, "levels")?;
    let f_drive = cfg.get_f64("levels", "f_drive_mhz")?;
    let delta_m = cfg.get_i64("levels", "delta_m")?.unwrap_or(2) as i32;
    cfg.reject_unknown()?;

    let d_e = d_e_of_temperature(&zfs, temperature)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let unit = [axis[0] / norm, axis[1] / norm, axis[2] / norm];

    let manifolds = [("gs", zfs.d_g()), ("es", d_e)];
    let mut rows: Vec<LevelRow> = Vec::with_capacity(2 * grid.len());
    for (name, d) in manifolds {
        let computed: Vec<Result<LevelRow, CliError>> = map_indexed(grid.len(), thread_cap(), |i| {
            let b = grid[i];
            let p = HamiltonianParams {
                d,
                g_factor,
                b: [unit[0] * b, unit[1] * b, unit[2] * b],
            };
            let ls = eigenlevels(&p)
                .map_err(|e| CliError::Config(format!("levels at B = {b} mT: {e}")))?;
            let energies_mhz = [
                ls.energy_of(LABEL_ORDER[0]),
                ls.energy_of(LABEL_ORDER[1]),
                ls.energy_of(LABEL_ORDER[2]),
                ls.energy_of(LABEL_ORDER[3]),
            ];
            let mut transition_mhz = [0.0; 6];
            for (k, (a, bb)) in PAIRS.iter().enumerate() {
                transition_mhz[k] = (energies_mhz[*a] - energies_mhz[*bb]).abs();
            }
            Ok(LevelRow { manifold: name.to_string(), b_mt: b, energies_mhz, transition_mhz })
        });
        for r in computed {
            rows.push(r?);
        }
    }

    let mut resonances = Vec::new();
    if let Some(f) = f_drive {
        if !(f > 0.0) {
            return Err(CliError::Config(format!("f_drive_mhz must be positive, got {f}")));
        }
        let range = (grid[0], *grid.last().unwrap());
        for (name, d) in manifolds {
            let template = HamiltonianParams { d, g_factor, b: [0.0; 3] };
            for root in resonance_fields(f, &template, unit, range, delta_m) {
                resonances.push(ResonanceRow {
                    manifold: name.to_string(),
                    from: root.transition.from.to_string(),
                    to: root.transition.to.to_string(),
                    delta_m: root.transition.delta_m,
                    b_mt: root.b_mt,
                    f_mhz: root.transition.frequency,
                });
            }
        }
    }

    let mut csv = String::new();
    csv.push_str("manifold,B_mT,E_m32_MHz,E_m12_MHz,E_p12_MHz,E_p32_MHz,f_m32_m12_MHz,f_m32_p12_MHz,f_m32_p32_MHz,f_m12_p12_MHz,f_m12_p32_MHz,f_p12_p32_MHz\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.manifold,
            r.b_mt,
            r.energies_mhz[0],
            r.energies_mhz[1],
            r.energies_mhz[2],
            r.energies_mhz[3],
            r.transition_mhz[0],
            r.transition_mhz[1],
            r.transition_mhz[2],
            r.transition_mhz[3],
            r.transition_mhz[4],
            r.transition_mhz[5],
        ));
    }
    csv.push_str("# resonance_fields\n");
    csv.push_str("manifold,from,to,delta_m,B_mT,f_MHz\n");
    for r in &resonances {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.manifold, r.from, r.to, r.delta_m, r.b_mt, r.f_mhz
        ));
    }
    write_or_stdout(&opts.out, &csv)?;

    if let Some(path) = &opts.envelope {
        let payload = LevelsPayload { kind: "levels".into(), rows, resonances };
        std::fs::write(path, ResultEnvelope::new(&opts.config_text, payload).to_json())?;
    }
    Ok(())
}
