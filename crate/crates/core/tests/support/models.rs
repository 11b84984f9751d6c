//! Small hand-built expansion cases.

use chrono::NaiveDate;
use std::collections::BTreeMap;

use heatgrid::demand::{DemandMode, DemandProfile, TimeGrid};
use heatgrid::expansion::{
    build, decode, BudgetScope, CarbonBudget, ExpansionProblem, ExpansionSolution, GeneratorTech,
    ModelInputs, StorageSpec, DEFAULT_PERIODS_PER_YEAR,
};
use heatgrid::lp::{self, LpSolution, SolverOptions};
use heatgrid::network::{Bus, Line, NetworkSpec};

pub struct Case {
    pub network: NetworkSpec,
    pub demand: DemandProfile,
    pub techs: Vec<GeneratorTech>,
    pub storage: StorageSpec,
    pub budget: CarbonBudget,
    pub grid: TimeGrid,
}

impl Case {
    pub fn inputs(&self) -> ModelInputs<'_> {
        ModelInputs {
            network: &self.network,
            demand: &self.demand,
            techs: &self.techs,
            storage: &self.storage,
            budget: &self.budget,
            grid: &self.grid,
            periods_per_year: DEFAULT_PERIODS_PER_YEAR,
        }
    }

    pub fn build(&self) -> ExpansionProblem {
        build(&self.inputs()).expect("build")
    }

    pub fn solve(&self) -> (ExpansionProblem, LpSolution) {
        let problem = self.build();
        let sol = lp::solve(&problem.lp, &SolverOptions::default()).expect("solve");
        (problem, sol)
    }

    pub fn solve_decoded(&self) -> ExpansionSolution {
        let (problem, sol) = self.solve();
        decode(&problem, &sol).expect("decode")
    }
}

pub fn grid(step_hours: f64, weeks: &[usize]) -> TimeGrid {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let total: usize = weeks.iter().sum();
    let mut g = TimeGrid::uniform(start, step_hours, total).unwrap();
    let mut ranges = Vec::new();
    let mut at = 0;
    for &w in weeks {
        ranges.push(at..at + w);
        at += w;
    }
    g.week_boundaries = ranges;
    g
}

pub fn ccgt() -> GeneratorTech {
    GeneratorTech {
        name: "ccgt".into(),
        dispatch_cost: 56_000.0,
        capital_cost: 1_000e6,
        emission_intensity: 365.0,
        lifetime_years: 25.0,
        expandable: true,
        renewable: false,
    }
}

pub fn wind() -> GeneratorTech {
    GeneratorTech {
        name: "wind".into(),
        dispatch_cost: 41_000.0,
        capital_cost: 1_300e6,
        emission_intensity: 0.0,
        lifetime_years: 20.0,
        expandable: true,
        renewable: true,
    }
}

pub fn battery() -> StorageSpec {
    StorageSpec {
        energy_capital_cost: 300e6,
        power_capital_cost: 10.0,
        efficiency: 0.9,
        ratio_min: 1.0,
        ratio_max: 4.0,
        lifetime_years: 10.0,
    }
}

pub fn budget(limit: f64) -> CarbonBudget {
    CarbonBudget { limit, label: format!("{limit}"), scope: BudgetScope::Joint }
}

pub fn line(id: &str, from: &str, to: &str, limit: f64) -> Line {
    Line { id: id.into(), from_bus: from.into(), to_bus: to.into(), reactance: 0.05, thermal_limit: limit, length_km: None }
}

pub fn profile(grid: &TimeGrid, per_bus: &[(&str, Vec<f64>)]) -> DemandProfile {
    DemandProfile {
        grid: grid.clone(),
        per_bus: per_bus.iter().map(|(b, s)| (b.to_string(), s.clone())).collect::<BTreeMap<_, _>>(),
        provenance: DemandMode::Homogeneous,
    }
}

/// One bus with existing CCGT serving `demand`.
pub fn single_bus(demand: Vec<f64>, step_hours: f64) -> Case {
    let g = grid(step_hours, &[demand.len()]);
    let mut bus = Bus::new("a", 1.0);
    bus.existing_capacity.insert("ccgt".into(), 10.0);
    Case {
        network: NetworkSpec { buses: vec![bus], lines: vec![], slack_bus: "a".into() },
        demand: profile(&g, &[("a", demand)]),
        techs: vec![ccgt()],
        storage: battery(),
        budget: budget(1e12),
        grid: g,
    }
}

/// Generator at `a` only, demand at `b` only, one line a→b.
pub fn two_bus(demand_b: Vec<f64>, limit: f64, expandable: bool) -> Case {
    let g = grid(1.0, &[demand_b.len()]);
    let mut a = Bus::new("a", 0.5);
    a.existing_capacity.insert("ccgt".into(), 20.0);
    let b = Bus::new("b", 0.5);
    let zeros = vec![0.0; demand_b.len()];
    Case {
        network: NetworkSpec { buses: vec![a, b], lines: vec![line("ab", "a", "b", limit)], slack_bus: "a".into() },
        demand: profile(&g, &[("a", zeros), ("b", demand_b)]),
        techs: vec![GeneratorTech { expandable, ..ccgt() }],
        storage: battery(),
        budget: budget(1e12),
        grid: g,
    }
}

/// Three buses in a triangle with wind, CCGT and storage, two weeks.
pub fn triangle(steps_per_week: usize, step_hours: f64, seed: u64) -> Case {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let weeks = [steps_per_week, steps_per_week];
    let g = grid(step_hours, &weeks);
    let steps = g.len();
    let ids = ["x", "y", "z"];
    let mut buses = Vec::new();
    let mut demand = Vec::new();
    for (k, id) in ids.iter().enumerate() {
        let mut bus = Bus::new(*id, 0.3);
        bus.existing_capacity.insert("ccgt".into(), rng.gen_range(0.0..4.0));
        bus.existing_capacity.insert("wind".into(), rng.gen_range(0.0..6.0));
        let avail: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..1.0)).collect();
        bus.availability.insert("wind".into(), avail);
        if k == 0 {
            let inj: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..1.0)).collect();
            bus.fixed_injections.push(heatgrid::network::FixedInjection {
                name: "nuclear".into(),
                price: 29_000.0,
                series: inj,
            });
        }
        buses.push(bus);
        let d: Vec<f64> = (0..steps).map(|_| rng.gen_range(1.0..8.0)).collect();
        demand.push((*id, d));
    }
    Case {
        network: NetworkSpec {
            buses,
            lines: vec![line("xy", "x", "y", 3.0), line("yz", "y", "z", 3.0), line("zx", "z", "x", 3.0)],
            slack_bus: "x".into(),
        },
        demand: profile(&g, &demand),
        techs: vec![ccgt(), wind()],
        storage: battery(),
        budget: budget(1e12),
        grid: g,
    }
}
