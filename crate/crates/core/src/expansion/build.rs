use std::collections::BTreeSet;

use log::debug;

use super::{
    amortized_capital, BudgetScope, CostData, ExpansionError, ExpansionProblem, ModelInputs, Split,
    VarIndex,
};
use crate::lp::{Bounds, LpProblem, LpSolution, VarId};
use crate::network::{bus_line_matrix, susceptance};

const NAME_FORBIDDEN: [char; 3] = [',', '[', ']'];

impl ModelInputs<'_> {
    pub fn validate(&self) -> Result<(), ExpansionError> {
        let invalid = |m: String| Err(ExpansionError::Invalid(m));
        self.network.validate()?;
        let grid = self.grid;
        let steps = grid.len();
        if steps == 0 {
            return Err(ExpansionError::GridMismatch("time grid is empty".into()));
        }
        if self.demand.grid != *grid {
            return Err(ExpansionError::GridMismatch("demand profile uses a different time grid".into()));
        }
        if !(self.periods_per_year > 0.0) {
            return invalid(format!("periods per year must be positive, got {}", self.periods_per_year));
        }

        let mut names = BTreeSet::new();
        for tech in self.techs {
            if !names.insert(tech.name.as_str()) {
                return invalid(format!("duplicate technology `{}`", tech.name));
            }
            let costs = [tech.dispatch_cost, tech.capital_cost, tech.emission_intensity];
            if costs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return invalid(format!("technology `{}`: costs and emissions must be >= 0", tech.name));
            }
            if !(tech.lifetime_years > 0.0) {
                return Err(ExpansionError::NonPositiveLifetime(tech.lifetime_years));
            }
        }
        let s = self.storage;
        if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
            return invalid(format!("storage efficiency {} outside (0, 1]", s.efficiency));
        }
        if !(s.ratio_min > 0.0 && s.ratio_min <= s.ratio_max && s.ratio_max.is_finite()) {
            return invalid(format!("storage ratio bounds [{}, {}] invalid", s.ratio_min, s.ratio_max));
        }
        if !(s.energy_capital_cost >= 0.0 && s.power_capital_cost >= 0.0) {
            return invalid("storage costs must be >= 0".into());
        }
        if !(s.lifetime_years > 0.0) {
            return Err(ExpansionError::NonPositiveLifetime(s.lifetime_years));
        }
        if !(self.budget.limit >= 0.0) {
            return invalid(format!("carbon budget {} must be >= 0", self.budget.limit));
        }

        let ids = self.network.buses.iter().map(|b| &b.id).chain(self.network.lines.iter().map(|l| &l.id));
        for id in ids.chain(self.techs.iter().map(|t| &t.name)) {
            if id.is_empty() || id.chars().any(|c| c.is_whitespace() || NAME_FORBIDDEN.contains(&c)) {
                return invalid(format!("identifier {id:?} must be non-empty without spaces, commas or brackets"));
            }
        }

        for bus in &self.network.buses {
            let series = self
                .demand
                .bus(&bus.id)
                .ok_or_else(|| ExpansionError::MissingDemand(bus.id.clone()))?;
            if series.len() != steps {
                return Err(ExpansionError::GridMismatch(format!(
                    "demand at `{}` has {} steps, grid has {steps}",
                    bus.id,
                    series.len()
                )));
            }
            for tech in bus.existing_capacity.keys().chain(bus.availability.keys()) {
                if !names.contains(tech.as_str()) {
                    return Err(ExpansionError::UnknownTech { bus: bus.id.clone(), tech: tech.clone() });
                }
            }
            for (tech, a) in &bus.availability {
                if a.len() != steps {
                    return Err(ExpansionError::GridMismatch(format!(
                        "{tech} availability at `{}` has {} steps, grid has {steps}",
                        bus.id,
                        a.len()
                    )));
                }
                let renewable = self.techs.iter().any(|t| &t.name == tech && t.renewable);
                if !renewable && a.iter().any(|&v| v != 1.0) {
                    return invalid(format!(
                        "{tech} at `{}` is not renewable, so its availability must be 1",
                        bus.id
                    ));
                }
            }
            for inj in &bus.fixed_injections {
                if inj.series.len() != steps {
                    return Err(ExpansionError::GridMismatch(format!(
                        "{} injection at `{}` has {} steps, grid has {steps}",
                        inj.name,
                        bus.id,
                        inj.series.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Assembles the expansion LP.
pub fn build(inputs: &ModelInputs) -> Result<ExpansionProblem, ExpansionError> {
    inputs.validate()?;
    let net = inputs.network;
    let grid = inputs.grid;
    let techs = inputs.techs;
    let storage = inputs.storage;
    let tau = grid.step_hours;
    let eta = storage.efficiency;
    let (n, g_count, l_count, steps, w_count) =
        (net.buses.len(), techs.len(), net.lines.len(), grid.len(), grid.week_boundaries.len());
    let ix = VarIndex { buses: n, techs: g_count, lines: l_count, steps, weeks: w_count };
    let incidence = bus_line_matrix(net)?;
    let endpoints = net.endpoints()?;
    let b: Vec<f64> = net.lines.iter().map(susceptance).collect::<Result<_, _>>()?;
    let slack = net.slack_index().expect("validated");

    let ppy = inputs.periods_per_year;
    let capital: Vec<f64> = techs
        .iter()
        .map(|t| amortized_capital(t.capital_cost, t.lifetime_years, ppy))
        .collect::<Result<_, _>>()?;
    let storage_energy = amortized_capital(storage.energy_capital_cost, storage.lifetime_years, ppy)?;
    let storage_power = amortized_capital(storage.power_capital_cost, storage.lifetime_years, ppy)?;
    let zero_budget = inputs.budget.limit == 0.0;

    let mut lp = LpProblem::new();
    let nonneg = Bounds::NON_NEGATIVE;
    for t in 0..steps {
        for (i, bus) in net.buses.iter().enumerate() {
            for tech in techs {
                let bounds = if zero_budget && tech.emission_intensity > 0.0 { Bounds::fixed(0.0) } else { nonneg };
                lp.add_var(format!("gen[{},{},{t}]", bus.id, tech.name), bounds, tech.dispatch_cost * tau);
            }
            for s in Split::ALL {
                lp.add_var(format!("{}[{},{t}]", s.label(), bus.id), nonneg, 0.0);
            }
            lp.add_var(format!("soc[{},{t}]", bus.id), nonneg, 0.0);
            lp.add_var(format!("net[{},{t}]", bus.id), Bounds::FREE, 0.0);
            let angle = if i == slack { Bounds::fixed(0.0) } else { Bounds::FREE };
            lp.add_var(format!("angle[{},{t}]", bus.id), angle, 0.0);
        }
        for line in &net.lines {
            lp.add_var(format!("fp[{},{t}]", line.id), nonneg, 0.0);
            lp.add_var(format!("fm[{},{t}]", line.id), nonneg, 0.0);
        }
    }
    for bus in &net.buses {
        for (g, tech) in techs.iter().enumerate() {
            let bounds = if tech.expandable { nonneg } else { Bounds::fixed(0.0) };
            lp.add_var(format!("cnew[{},{}]", bus.id, tech.name), bounds, capital[g]);
        }
    }
    for bus in &net.buses {
        lp.add_var(format!("socmax[{}]", bus.id), nonneg, storage_energy);
    }
    for bus in &net.buses {
        lp.add_var(format!("pmax[{}]", bus.id), nonneg, storage_power);
    }
    for bus in &net.buses {
        for w in 0..w_count {
            lp.add_var(format!("soc0[{},{w}]", bus.id), nonneg, 0.0);
        }
    }
    debug_assert_eq!(lp.num_vars(), ix.num_vars());

    let v = VarId;
    let sp = |t, i, s| v(ix.split(t, i, s));
    let mut fixed_cost = 0.0;
    let mut row: Vec<(VarId, f64)> = Vec::new();
    for t in 0..steps {
        let week = grid.week_of(t);
        let first_of_week = grid.week_boundaries[week].start == t;
        for (i, bus) in net.buses.iter().enumerate() {
            let id = &bus.id;
            let fixed = bus.fixed_at(t);
            for inj in &bus.fixed_injections {
                fixed_cost += inj.price * inj.series[t] * tau;
            }

            row.clear();
            row.extend((0..g_count).map(|g| (v(ix.gen(t, i, g)), 1.0)));
            row.extend([(sp(t, i, Split::G2n), -1.0), (sp(t, i, Split::G2d), -1.0), (sp(t, i, Split::G2s), -1.0)]);
            lp.add_row(format!("gensplit[{id},{t}]"), Bounds::fixed(-fixed), &row);

            lp.add_row(
                format!("netbal[{id},{t}]"),
                Bounds::fixed(0.0),
                &[
                    (v(ix.net(t, i)), 1.0),
                    (sp(t, i, Split::G2n), -1.0),
                    (sp(t, i, Split::S2n), -eta),
                    (sp(t, i, Split::N2s), 1.0),
                    (sp(t, i, Split::N2d), 1.0),
                ],
            );

            row.clear();
            row.push((v(ix.net(t, i)), 1.0));
            for l in 0..l_count {
                let sign = incidence[i][l] as f64;
                if sign != 0.0 {
                    row.push((v(ix.flow_pos(t, l)), -sign));
                    row.push((v(ix.flow_neg(t, l)), sign));
                }
            }
            lp.add_row(format!("bal[{id},{t}]"), Bounds::fixed(0.0), &row);

            let d = inputs.demand.bus(id).expect("validated")[t];
            lp.add_row(
                format!("demand[{id},{t}]"),
                Bounds::fixed(d),
                &[(sp(t, i, Split::G2d), 1.0), (sp(t, i, Split::S2d), eta), (sp(t, i, Split::N2d), 1.0)],
            );

            lp.add_row(
                format!("chg[{id},{t}]"),
                Bounds::at_most(0.0),
                &[(sp(t, i, Split::G2s), 1.0), (sp(t, i, Split::N2s), 1.0), (v(ix.pmax(i)), -1.0)],
            );
            lp.add_row(
                format!("dis[{id},{t}]"),
                Bounds::at_most(0.0),
                &[(sp(t, i, Split::S2n), 1.0), (sp(t, i, Split::S2d), 1.0), (v(ix.pmax(i)), -1.0)],
            );
            lp.add_row(
                format!("socbox[{id},{t}]"),
                Bounds::at_most(0.0),
                &[(v(ix.soc(t, i)), 1.0), (v(ix.socmax(i)), -1.0)],
            );

            row.clear();
            row.push((v(ix.soc(t, i)), 1.0));
            if first_of_week {
                row.push((v(ix.soc0(i, week)), -1.0));
            } else {
                row.push((v(ix.soc(t - 1, i)), -1.0));
                push_storage_flows(&mut row, &ix, t - 1, i, -tau);
            }
            lp.add_row(format!("soc[{id},{t}]"), Bounds::fixed(0.0), &row);

            for (g, tech) in techs.iter().enumerate() {
                let a = bus.availability_at(&tech.name, t);
                let old = bus.existing(&tech.name);
                lp.add_row(
                    format!("genlim[{id},{},{t}]", tech.name),
                    Bounds::at_most(a * old),
                    &[(v(ix.gen(t, i, g)), 1.0), (v(ix.cnew(i, g)), -a)],
                );
            }
        }
        for (l, line) in net.lines.iter().enumerate() {
            let (from, to) = endpoints[l];
            lp.add_row(
                format!("dcpf[{},{t}]", line.id),
                Bounds::fixed(0.0),
                &[
                    (v(ix.flow_pos(t, l)), 1.0),
                    (v(ix.flow_neg(t, l)), -1.0),
                    (v(ix.angle(t, from)), -b[l]),
                    (v(ix.angle(t, to)), b[l]),
                ],
            );
            lp.add_row(
                format!("flowlim[{},{t}]", line.id),
                Bounds::new(-line.thermal_limit, line.thermal_limit),
                &[(v(ix.flow_pos(t, l)), 1.0), (v(ix.flow_neg(t, l)), -1.0)],
            );
        }
    }

    for (i, bus) in net.buses.iter().enumerate() {
        for (w, range) in grid.week_boundaries.iter().enumerate() {
            let last = range.end - 1;
            row.clear();
            row.push((v(ix.soc(last, i)), 1.0));
            push_storage_flows(&mut row, &ix, last, i, tau);
            row.push((v(ix.soc0(i, w)), -1.0));
            lp.add_row(format!("period[{},{w}]", bus.id), Bounds::fixed(0.0), &row);
        }
    }
    for (i, bus) in net.buses.iter().enumerate() {
        lp.add_row(
            format!("ratiomin[{}]", bus.id),
            Bounds::at_most(0.0),
            &[(v(ix.pmax(i)), storage.ratio_min), (v(ix.socmax(i)), -1.0)],
        );
        lp.add_row(
            format!("ratiomax[{}]", bus.id),
            Bounds::at_most(0.0),
            &[(v(ix.socmax(i)), 1.0), (v(ix.pmax(i)), -storage.ratio_max)],
        );
    }

    let carbon_row = |lp: &mut LpProblem, name: String, range: std::ops::Range<usize>, limit: f64| {
        let mut entries = Vec::new();
        for t in range {
            for i in 0..n {
                for (g, tech) in techs.iter().enumerate() {
                    if tech.emission_intensity > 0.0 {
                        entries.push((v(ix.gen(t, i, g)), tau * tech.emission_intensity));
                    }
                }
            }
        }
        lp.add_row(name, Bounds::at_most(limit), &entries);
    };
    match inputs.budget.scope {
        BudgetScope::Joint => carbon_row(&mut lp, "carbon".into(), 0..steps, inputs.budget.limit),
        BudgetScope::PerWeek => {
            for (w, range) in grid.week_boundaries.iter().enumerate() {
                let share = range.len() as f64 / steps as f64;
                carbon_row(&mut lp, format!("carbon[{w}]"), range.clone(), inputs.budget.limit * share);
            }
        }
    }
    lp.objective_offset = fixed_cost;
    debug!("expansion LP: {} variables, {} rows, {} nonzeros", lp.num_vars(), lp.num_rows(), lp.matrix.len());

    Ok(ExpansionProblem {
        lp,
        index: ix,
        bus_ids: net.buses.iter().map(|b| b.id.clone()).collect(),
        tech_names: techs.iter().map(|t| t.name.clone()).collect(),
        line_ids: net.lines.iter().map(|l| l.id.clone()).collect(),
        step_hours: tau,
        weeks: grid.week_boundaries.clone(),
        efficiency: eta,
        costs: CostData {
            dispatch: techs.iter().map(|t| t.dispatch_cost).collect(),
            capital,
            storage_energy,
            storage_power,
            fixed_injection: fixed_cost,
        },
    })
}

/// Appends `scale · (g2s + n2s − s2n − s2d)` at step `t`.
fn push_storage_flows(row: &mut Vec<(VarId, f64)>, ix: &VarIndex, t: usize, i: usize, scale: f64) {
    row.push((VarId(ix.split(t, i, Split::G2s)), scale));
    row.push((VarId(ix.split(t, i, Split::N2s)), scale));
    row.push((VarId(ix.split(t, i, Split::S2n)), -scale));
    row.push((VarId(ix.split(t, i, Split::S2d)), -scale));
}

/// Names of rows whose activity at the solver's final point lies outside
/// their bounds by more than `tol`, worst first. For an infeasible solve
/// these are the constraints the solver could not satisfy together.
pub fn infeasible_rows(problem: &ExpansionProblem, solution: &LpSolution, tol: f64) -> Vec<(String, f64)> {
    let lp = &problem.lp;
    if solution.primal.len() != lp.num_vars() {
        return Vec::new();
    }
    let activity = lp.row_activity(&solution.primal);
    let mut out: Vec<(String, f64)> = activity
        .iter()
        .enumerate()
        .filter_map(|(r, &a)| {
            let viol = lp.row_bounds[r].violation(a);
            (viol > tol).then(|| (lp.row_label(r), viol))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}
