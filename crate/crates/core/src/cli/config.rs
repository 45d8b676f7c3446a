//! Flat `key = value` run configuration.
//!
//! Lines hold one assignment each; `#` starts a comment. Unknown keys are
//! rejected with their line number. A run needs either `model = <preset>`
//! or a full inline factor specification; inline keys override preset
//! fields when both appear.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::jump::JumpMeasure;
use crate::market::{
    CoefficientMap, CrashSpec, FactorDynamics, FactorKind, LambdaMap, ModelSpec, SigmaSqMap,
};
use crate::presets::{preset, PresetId};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n_paths: 2, n_steps: 1000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub preset: Option<PresetId>,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    pub out_dir: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "model", "factor", "kappa", "theta", "varsigma", "z0", "sigma_sq", "lambda", "measure",
    "l_woc", "l_levy_max", "r", "rho", "horizon", "n_t", "n_x", "theta_weight", "picard_iters",
    "n_paths", "n_steps", "seed", "out_dir",
];

struct Entry {
    value: String,
    line: usize,
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config { line: line_no, msg: format!("unknown key '{key}'") });
        }
        if map
            .insert(key.clone(), Entry { value: value.trim().to_string(), line: line_no })
            .is_some()
        {
            return Err(Error::Config { line: line_no, msg: format!("duplicate key '{key}'") });
        }
    }
    Ok(map)
}

fn get_f64(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(e) => e.value.parse::<f64>().map(Some).map_err(|_| Error::Config {
            line: e.line,
            msg: format!("'{key}' must be a number, got '{}'", e.value),
        }),
    }
}

fn get_usize(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<usize>> {
    match map.get(key) {
        None => Ok(None),
        Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| Error::Config {
            line: e.line,
            msg: format!("'{key}' must be a nonnegative integer, got '{}'", e.value),
        }),
    }
}

fn get_u64(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<u64>> {
    match map.get(key) {
        None => Ok(None),
        Some(e) => e.value.parse::<u64>().map(Some).map_err(|_| Error::Config {
            line: e.line,
            msg: format!("'{key}' must be an unsigned integer, got '{}'", e.value),
        }),
    }
}

fn parse_lambda(spec: &str, line: usize) -> Result<LambdaMap> {
    let s = spec.trim().to_ascii_lowercase();
    if s == "identity" {
        return Ok(LambdaMap::Identity);
    }
    if let Some(rest) = s.strip_prefix("appropriate:") {
        let alpha = rest.parse::<f64>().map_err(|_| Error::Config {
            line,
            msg: format!("lambda: bad alpha '{rest}'"),
        })?;
        return Ok(LambdaMap::Appropriate { alpha });
    }
    if let Some(rest) = s.strip_prefix("constant:") {
        let v = rest.parse::<f64>().map_err(|_| Error::Config {
            line,
            msg: format!("lambda: bad constant '{rest}'"),
        })?;
        return Ok(LambdaMap::Constant(v));
    }
    Err(Error::Config {
        line,
        msg: format!("lambda must be identity, appropriate:<alpha> or constant:<value>, got '{spec}'"),
    })
}

fn parse_measure(spec: &str, line: usize) -> Result<JumpMeasure> {
    let s = spec.trim().to_ascii_lowercase();
    if s == "none" {
        return Ok(JumpMeasure::none());
    }
    if let Some(rest) = s.strip_prefix("atom:") {
        let q = rest
            .parse::<f64>()
            .map_err(|_| Error::Config { line, msg: format!("measure: bad atom size '{rest}'") })?;
        return JumpMeasure::atom(q);
    }
    if let Some(rest) = s.strip_prefix("reciprocal:") {
        let l = rest
            .parse::<f64>()
            .map_err(|_| Error::Config { line, msg: format!("measure: bad bound '{rest}'") })?;
        return JumpMeasure::reciprocal(l);
    }
    Err(Error::Config {
        line,
        msg: format!("measure must be none, atom:<q> or reciprocal:<l_max>, got '{spec}'"),
    })
}

/// Render a model as configuration text that [`parse_config`] reads back.
pub fn model_to_config(model: &ModelSpec) -> String {
    let mut out = String::new();
    let kind = match model.factor.kind {
        FactorKind::Cir => "cir",
        FactorKind::Ou => "ou",
        FactorKind::Frozen => "frozen",
    };
    out.push_str(&format!("factor = {kind}\n"));
    out.push_str(&format!("kappa = {}\n", model.factor.kappa));
    out.push_str(&format!("theta = {}\n", model.factor.theta));
    out.push_str(&format!("varsigma = {}\n", model.factor.varsigma));
    out.push_str(&format!("z0 = {}\n", model.factor.z0));
    match model.coeffs.sigma_sq {
        SigmaSqMap::Identity => out.push_str("sigma_sq = identity\n"),
        SigmaSqMap::Constant(v) => out.push_str(&format!("sigma_sq = {v}\n")),
    }
    match model.coeffs.lambda {
        LambdaMap::Identity => out.push_str("lambda = identity\n"),
        LambdaMap::Constant(v) => out.push_str(&format!("lambda = constant:{v}\n")),
        LambdaMap::Appropriate { alpha } => out.push_str(&format!("lambda = appropriate:{alpha}\n")),
    }
    match model.measure {
        JumpMeasure::None => out.push_str("measure = none\n"),
        JumpMeasure::Atom { q, .. } => out.push_str(&format!("measure = atom:{q}\n")),
        JumpMeasure::Reciprocal { l_max } => out.push_str(&format!("measure = reciprocal:{l_max}\n")),
    }
    out.push_str(&format!("l_woc = {}\n", model.crash.l_woc));
    out.push_str(&format!("l_levy_max = {}\n", model.crash.l_levy_max));
    out.push_str(&format!("r = {}\n", model.r));
    out.push_str(&format!("rho = {}\n", model.rho));
    out.push_str(&format!("horizon = {}\n", model.horizon));
    out
}

/// Parse configuration text into a typed run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let map = parse_entries(text)?;

    let preset_id = match map.get("model") {
        Some(e) => Some(PresetId::parse(&e.value).map_err(|err| Error::Config {
            line: e.line,
            msg: err.to_string(),
        })?),
        None => None,
    };
    let mut model = match preset_id {
        Some(id) => preset(id),
        None => {
            if !map.contains_key("factor") {
                return Err(Error::Config { line: 0, msg: "model required".into() });
            }
            // inline skeleton, overwritten field by field below
            ModelSpec {
                factor: FactorDynamics::frozen(0.0),
                coeffs: CoefficientMap {
                    sigma_sq: SigmaSqMap::Identity,
                    lambda: LambdaMap::Identity,
                },
                crash: CrashSpec { l_woc: 0.5, l_levy_max: 0.2 },
                measure: JumpMeasure::none(),
                r: 0.0,
                rho: 0.0,
                horizon: 5.0,
            }
        }
    };

    if let Some(e) = map.get("factor") {
        model.factor.kind = match e.value.to_ascii_lowercase().as_str() {
            "cir" => FactorKind::Cir,
            "ou" => FactorKind::Ou,
            "frozen" => FactorKind::Frozen,
            other => {
                return Err(Error::Config {
                    line: e.line,
                    msg: format!("factor must be cir, ou or frozen, got '{other}'"),
                })
            }
        };
    }
    if let Some(v) = get_f64(&map, "kappa")? {
        model.factor.kappa = v;
    }
    if let Some(v) = get_f64(&map, "theta")? {
        model.factor.theta = v;
    }
    if let Some(v) = get_f64(&map, "varsigma")? {
        model.factor.varsigma = v;
    }
    if let Some(v) = get_f64(&map, "z0")? {
        model.factor.z0 = v;
    }
    if let Some(e) = map.get("sigma_sq") {
        model.coeffs.sigma_sq = if e.value.eq_ignore_ascii_case("identity") {
            SigmaSqMap::Identity
        } else {
            let v = e.value.parse::<f64>().map_err(|_| Error::Config {
                line: e.line,
                msg: format!("sigma_sq must be identity or a number, got '{}'", e.value),
            })?;
            SigmaSqMap::Constant(v)
        };
    }
    if let Some(e) = map.get("lambda") {
        model.coeffs.lambda = parse_lambda(&e.value, e.line)?;
    }
    if let Some(e) = map.get("measure") {
        model.measure = parse_measure(&e.value, e.line)?;
        if let Some(l_max) = model.measure.l_max() {
            model.crash.l_levy_max = l_max;
        }
    }
    if let Some(v) = get_f64(&map, "l_woc")? {
        model.crash.l_woc = v;
    }
    if let Some(v) = get_f64(&map, "l_levy_max")? {
        model.crash.l_levy_max = v;
    }
    if let Some(v) = get_f64(&map, "r")? {
        model.r = v;
    }
    if let Some(v) = get_f64(&map, "rho")? {
        model.rho = v;
    }
    if let Some(v) = get_f64(&map, "horizon")? {
        model.horizon = v;
    }
    model.validate()?;

    let mut solver = SolverConfig::default();
    if let Some(v) = get_usize(&map, "n_t")? {
        solver.n_t = v;
    }
    if let Some(v) = get_usize(&map, "n_x")? {
        solver.n_x = v;
    }
    if let Some(v) = get_f64(&map, "theta_weight")? {
        solver.theta_weight = v;
    }
    if let Some(v) = get_usize(&map, "picard_iters")? {
        solver.picard_iters = v;
    }
    solver.validate()?;

    let mut sim = SimConfig { n_steps: solver.n_t, ..Default::default() };
    if let Some(v) = get_usize(&map, "n_paths")? {
        sim.n_paths = v;
    }
    if let Some(v) = get_usize(&map, "n_steps")? {
        sim.n_steps = v;
    }
    if let Some(v) = get_u64(&map, "seed")? {
        sim.seed = v;
    }

    let out_dir = map.get("out_dir").map(|e| PathBuf::from(&e.value)).unwrap_or_else(|| ".".into());

    Ok(RunConfig { model, preset: preset_id, solver, sim, out_dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_line_resolves_all_values() {
        let cfg = parse_config("model = a\n").unwrap();
        assert_eq!(cfg.preset, Some(PresetId::A));
        assert_eq!(cfg.model.factor.kappa, 3.99);
        assert_eq!(cfg.model.crash.l_woc, 0.5);
        assert_eq!(cfg.solver.n_t, 1000);
        assert_eq!(cfg.sim.n_paths, 2);
    }

    #[test]
    fn invalid_kappa_names_the_invariant() {
        let err = parse_config("model = a\nkappa = -1\n").unwrap_err();
        assert!(err.to_string().contains("kappa must be > 0"), "{err}");
    }

    #[test]
    fn empty_file_requires_model() {
        let err = parse_config("").unwrap_err();
        assert!(err.to_string().contains("model required"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("model = a\nbogus = 1\n").unwrap_err();
        match err {
            Error::Config { line, ref msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# run setup\nmodel = b  # atom preset\nseed = 99\nn_t = 500\nrho = 0.3\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.sim.seed, 99);
        assert_eq!(cfg.solver.n_t, 500);
        assert_eq!(cfg.model.rho, 0.3);
    }

    #[test]
    fn inline_model_without_preset() {
        let text = "factor = ou\nkappa = 3.5\ntheta = 0.014\nvarsigma = 0.3\nz0 = 0.014\nsigma_sq = 0.014\nlambda = identity\nmeasure = none\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.model.factor.kind, FactorKind::Ou);
        assert_eq!(cfg.model.coeffs.sigma_sq, SigmaSqMap::Constant(0.014));
    }

    #[test]
    fn measure_updates_crash_support() {
        let cfg = parse_config("model = a\nmeasure = atom:0.1\nl_levy_max = 0.1\n").unwrap();
        assert_eq!(cfg.model.crash.l_levy_max, 0.1);
        cfg.model.validate().unwrap();
    }

    #[test]
    fn malformed_line_rejected() {
        let err = parse_config("model a\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
    }

    #[test]
    fn model_round_trips_through_config_text() {
        for id in crate::presets::PresetId::ALL {
            let m = crate::presets::preset(id);
            let text = model_to_config(&m);
            let back = parse_config(&text).unwrap();
            assert_eq!(back.model, m, "round trip failed for preset {id}:\n{text}");
        }
        // and for a frozen variant
        let frozen = crate::presets::preset(crate::presets::PresetId::C).frozen_at(0.02);
        let back = parse_config(&model_to_config(&frozen)).unwrap();
        assert_eq!(back.model, frozen);
    }
}
