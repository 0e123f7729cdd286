//! Shared fixtures for the pipeline benchmarks.

use hyperbmc_core::{
    builtin_spec, gen_bakery, gen_nonrepudiation, parse_formula, parse_grid_map, CheckConfig,
    HyperFormula, KripkeStructure, Mode, ModelMap, NonrepVariant, Semantics,
};

/// The 4x4 obstacle map shipped in `data/grid4.txt`.
pub const GRID4: &str = "I...\n.##.\n.#..\n...G\n";

pub fn spec(name: &str) -> HyperFormula {
    parse_formula(&builtin_spec(name).expect("builtin").formula).expect("builtin formulas parse")
}

pub fn uniform(f: &HyperFormula, k: KripkeStructure) -> ModelMap {
    ModelMap::uniform(f.vars(), k)
}

pub fn bakery_falsify(k_max: usize) -> CheckConfig {
    let f = spec("symmetry");
    let models = uniform(&f, gen_bakery(2).expect("n = 2"));
    CheckConfig::new(f, models, k_max, Mode::Falsify)
}

pub fn nonrep(variant: NonrepVariant) -> CheckConfig {
    let f = spec("fairness");
    let models = uniform(&f, gen_nonrepudiation(variant).expect("generator"));
    let (mode, sem) = match variant {
        NonrepVariant::Incorrect => (Mode::Falsify, Semantics::Hpes),
        NonrepVariant::Correct => (Mode::Prove, Semantics::Hopt),
    };
    CheckConfig::new(f, models, 15, mode).semantics(sem).from(15)
}

pub fn grid4_shortest_path() -> CheckConfig {
    let f = spec("shortest_path");
    let map = parse_grid_map(GRID4).expect("valid map");
    let models = uniform(&f, map.to_kripke().expect("valid grid"));
    CheckConfig::new(f, models, 7, Mode::Raw).from(7)
}
