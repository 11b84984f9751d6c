//! Constraint residuals evaluated from decoded values and model inputs
//! alone, without touching the LP matrix.

use serde::Serialize;

use super::{BudgetScope, ExpansionError, ExpansionSolution, ModelInputs, Split};
use crate::network::{bus_line_matrix, susceptance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyResidual {
    pub family: &'static str,
    pub max_residual: f64,
    /// Where the largest residual occurs.
    pub location: Option<String>,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub tolerance: f64,
    pub max_residual: f64,
    pub within_tolerance: bool,
    pub families: Vec<FamilyResidual>,
}

impl ConstraintReport {
    pub fn family(&self, name: &str) -> Option<&FamilyResidual> {
        self.families.iter().find(|f| f.family == name)
    }

    pub fn worst(&self) -> Option<&FamilyResidual> {
        self.families.iter().max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
    }
}

struct Family {
    inner: FamilyResidual,
}

impl Family {
    fn new(family: &'static str) -> Self {
        Family { inner: FamilyResidual { family, max_residual: 0.0, location: None, checked: 0 } }
    }

    fn record(&mut self, residual: f64, location: impl FnOnce() -> String) {
        self.inner.checked += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.inner.max_residual {
            self.inner.max_residual = r;
            self.inner.location = Some(location());
        }
    }

    fn eq(&mut self, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        self.record((lhs - rhs).abs(), location);
    }

    fn le(&mut self, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        self.record((lhs - rhs).max(0.0), location);
    }
}

fn check_shape(what: &str, len: usize, expected: usize) -> Result<(), ExpansionError> {
    if len != expected {
        return Err(ExpansionError::ShapeMismatch(format!("{what}: {len} entries, expected {expected}")));
    }
    Ok(())
}

fn check_shapes(s: &ExpansionSolution, inputs: &ModelInputs) -> Result<(), ExpansionError> {
    let (n, g, l, t) =
        (inputs.network.buses.len(), inputs.techs.len(), inputs.network.lines.len(), inputs.grid.len());
    let w = inputs.grid.week_boundaries.len();
    check_shape("buses", s.bus_ids.len(), n)?;
    check_shape("technologies", s.tech_names.len(), g)?;
    check_shape("lines", s.line_ids.len(), l)?;
    check_shape("weeks", s.weeks.len(), w)?;
    for (i, bus) in inputs.network.buses.iter().enumerate() {
        if s.bus_ids[i] != bus.id {
            return Err(ExpansionError::ShapeMismatch(format!("bus {i} is `{}`, expected `{}`", s.bus_ids[i], bus.id)));
        }
    }
    let series = |what: &str, v: &Vec<Vec<f64>>, rows: usize, cols: usize| -> Result<(), ExpansionError> {
        check_shape(what, v.len(), rows)?;
        v.iter().try_for_each(|r| check_shape(what, r.len(), cols))
    };
    check_shape("dispatch", s.dispatch.len(), n)?;
    for d in &s.dispatch {
        series("dispatch", d, g, t)?;
    }
    check_shape("splits", s.splits.len(), n)?;
    for sp in &s.splits {
        series("splits", sp, Split::ALL.len(), t)?;
    }
    series("new capacity", &s.new_capacity, n, g)?;
    check_shape("storage energy", s.storage_energy.len(), n)?;
    check_shape("storage power", s.storage_power.len(), n)?;
    series("soc", &s.soc, n, t)?;
    series("initial soc", &s.soc_initial, n, w)?;
    series("positive flow", &s.flow_pos, l, t)?;
    series("negative flow", &s.flow_neg, l, t)?;
    series("angles", &s.angles, n, t)?;
    series("net injection", &s.net_injection, n, t)?;
    Ok(())
}

/// Largest residual of every constraint family, in the families' own
/// units (GW, GWh or tCO₂e).
pub fn audit(
    solution: &ExpansionSolution,
    inputs: &ModelInputs,
    tol: f64,
) -> Result<ConstraintReport, ExpansionError> {
    check_shapes(solution, inputs)?;
    let s = solution;
    let net = inputs.network;
    let grid = inputs.grid;
    let tau = grid.step_hours;
    let eta = inputs.storage.efficiency;
    let steps = grid.len();
    let incidence = bus_line_matrix(net)?;
    let endpoints = net.endpoints()?;
    let b: Vec<f64> = net.lines.iter().map(susceptance).collect::<Result<_, _>>()?;

    let mut nonneg = Family::new("nonnegativity");
    let mut balance = Family::new("bus_network_balance");
    let mut dcpf = Family::new("dc_power_flow");
    let mut line_limits = Family::new("line_limits");
    let mut gen_limits = Family::new("generation_limits");
    let mut carbon = Family::new("carbon_budget");
    let mut gen_split = Family::new("generator_split");
    let mut net_power = Family::new("net_power");
    let mut demand = Family::new("demand_balance");
    let mut charge = Family::new("charge_limit");
    let mut discharge = Family::new("discharge_limit");
    let mut soc_box = Family::new("soc_limits");
    let mut recursion = Family::new("soc_recursion");
    let mut initial = Family::new("soc_initial");
    let mut periodicity = Family::new("soc_periodicity");
    let mut ratio = Family::new("storage_ratio");
    let mut fixed_cap = Family::new("fixed_capacity");
    let mut slack = Family::new("slack_angle");
    let mut conservation = Family::new("energy_conservation");

    for (i, bus) in net.buses.iter().enumerate() {
        let id = &bus.id;
        let d = inputs.demand.bus(id).ok_or_else(|| ExpansionError::MissingDemand(id.clone()))?;
        check_shape("demand", d.len(), steps)?;
        nonneg.le(-s.storage_energy[i], 0.0, || format!("socmax[{id}]"));
        nonneg.le(-s.storage_power[i], 0.0, || format!("pmax[{id}]"));
        for (g, tech) in inputs.techs.iter().enumerate() {
            nonneg.le(-s.new_capacity[i][g], 0.0, || format!("cnew[{id},{}]", tech.name));
            if !tech.expandable {
                fixed_cap.record(s.new_capacity[i][g].abs(), || format!("cnew[{id},{}]", tech.name));
            }
        }
        for t in 0..steps {
            let split = |k: Split| s.splits[i][k as usize][t];
            for k in Split::ALL {
                nonneg.le(-split(k), 0.0, || format!("{}[{id},{t}]", k.label()));
            }
            nonneg.le(-s.soc[i][t], 0.0, || format!("soc[{id},{t}]"));

            let mut generation = 0.0;
            for (g, tech) in inputs.techs.iter().enumerate() {
                let p = s.dispatch[i][g][t];
                generation += p;
                nonneg.le(-p, 0.0, || format!("gen[{id},{},{t}]", tech.name));
                let cap = bus.availability_at(&tech.name, t) * (bus.existing(&tech.name) + s.new_capacity[i][g]);
                gen_limits.le(p, cap, || format!("genlim[{id},{},{t}]", tech.name));
            }
            let fixed = bus.fixed_at(t);
            gen_split.eq(generation + fixed, split(Split::G2n) + split(Split::G2d) + split(Split::G2s), || {
                format!("gensplit[{id},{t}]")
            });
            net_power.eq(
                s.net_injection[i][t],
                split(Split::G2n) + eta * split(Split::S2n) - split(Split::N2s) - split(Split::N2d),
                || format!("netbal[{id},{t}]"),
            );
            let flows: f64 = (0..net.lines.len()).map(|l| incidence[i][l] as f64 * s.flow(l, t)).sum();
            balance.eq(s.net_injection[i][t], flows, || format!("bal[{id},{t}]"));
            demand.eq(d[t], split(Split::G2d) + eta * split(Split::S2d) + split(Split::N2d), || {
                format!("demand[{id},{t}]")
            });
            charge.le(s.charge(i, t), s.storage_power[i], || format!("chg[{id},{t}]"));
            discharge.le(s.discharge(i, t), s.storage_power[i], || format!("dis[{id},{t}]"));
            soc_box.le(s.soc[i][t], s.storage_energy[i], || format!("socbox[{id},{t}]"));
            if i == net.slack_index().expect("validated") {
                slack.record(s.angles[i][t].abs(), || format!("angle[{id},{t}]"));
            }
        }
        for (w, range) in grid.week_boundaries.iter().enumerate() {
            initial.eq(s.soc[i][range.start], s.soc_initial[i][w], || format!("soc[{id},{}]", range.start));
            nonneg.le(-s.soc_initial[i][w], 0.0, || format!("soc0[{id},{w}]"));
            for t in range.start + 1..range.end {
                let expected = s.soc[i][t - 1] + tau * (s.charge(i, t - 1) - s.discharge(i, t - 1));
                recursion.eq(s.soc[i][t], expected, || format!("soc[{id},{t}]"));
            }
            periodicity.eq(s.soc_final(i, w), s.soc_initial[i][w], || format!("period[{id},{w}]"));
        }
        let st = inputs.storage;
        ratio.le(st.ratio_min * s.storage_power[i], s.storage_energy[i], || format!("ratiomin[{id}]"));
        ratio.le(s.storage_energy[i], st.ratio_max * s.storage_power[i], || format!("ratiomax[{id}]"));
    }

    for (l, line) in net.lines.iter().enumerate() {
        let (from, to) = endpoints[l];
        for t in 0..steps {
            nonneg.le(-s.flow_pos[l][t], 0.0, || format!("fp[{},{t}]", line.id));
            nonneg.le(-s.flow_neg[l][t], 0.0, || format!("fm[{},{t}]", line.id));
            let f = s.flow(l, t);
            dcpf.eq(f, b[l] * (s.angles[from][t] - s.angles[to][t]), || format!("dcpf[{},{t}]", line.id));
            line_limits.le(f.abs(), line.thermal_limit, || format!("flowlim[{},{t}]", line.id));
        }
    }

    for t in 0..steps {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (i, bus) in net.buses.iter().enumerate() {
            lhs += inputs.demand.bus(&bus.id).expect("checked")[t] + s.charge(i, t);
            rhs += s.dispatch[i].iter().map(|d| d[t]).sum::<f64>()
                + bus.fixed_at(t)
                + eta * s.discharge(i, t);
        }
        conservation.eq(lhs, rhs, || format!("step {t}"));
    }

    let emissions = |range: std::ops::Range<usize>| -> f64 {
        let mut total = 0.0;
        for t in range {
            for i in 0..net.buses.len() {
                for (g, tech) in inputs.techs.iter().enumerate() {
                    total += tau * tech.emission_intensity * s.dispatch[i][g][t];
                }
            }
        }
        total
    };
    match inputs.budget.scope {
        BudgetScope::Joint => carbon.le(emissions(0..steps), inputs.budget.limit, || "carbon".into()),
        BudgetScope::PerWeek => {
            for (w, range) in grid.week_boundaries.iter().enumerate() {
                let limit = inputs.budget.limit * range.len() as f64 / steps as f64;
                carbon.le(emissions(range.clone()), limit, || format!("carbon[{w}]"));
            }
        }
    }

    let families: Vec<FamilyResidual> = [
        balance, dcpf, line_limits, gen_limits, carbon, gen_split, net_power, demand, charge, discharge,
        soc_box, recursion, initial, periodicity, ratio, fixed_cap, slack, nonneg, conservation,
    ]
    .into_iter()
    .map(|f| f.inner)
    .collect();
    let max_residual = families.iter().map(|f| f.max_residual).fold(0.0, f64::max);
    Ok(ConstraintReport { tolerance: tol, max_residual, within_tolerance: max_residual <= tol, families })
}
