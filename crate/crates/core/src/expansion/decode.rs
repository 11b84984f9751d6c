use super::{CostBreakdown, ExpansionError, ExpansionProblem, ExpansionSolution, Split};
use crate::lp::{LpSolution, LpStatus};

const OBJECTIVE_REL_TOL: f64 = 1e-6;

/// Maps an optimal LP point back to typed model quantities and recomputes
/// the cost terms from them.
pub fn decode(problem: &ExpansionProblem, lp: &LpSolution) -> Result<ExpansionSolution, ExpansionError> {
    if lp.status != LpStatus::Optimal {
        return Err(ExpansionError::NotOptimal(lp.status));
    }
    let ix = &problem.index;
    if lp.primal.len() != ix.num_vars() {
        return Err(ExpansionError::ShapeMismatch(format!(
            "solution has {} values, problem has {} variables",
            lp.primal.len(),
            ix.num_vars()
        )));
    }
    let x = &lp.primal;
    let (n, g_count, l_count, steps) = (ix.buses, ix.techs, ix.lines, ix.steps);
    let over_t = |f: &dyn Fn(usize) -> usize| (0..steps).map(|t| x[f(t)]).collect::<Vec<f64>>();

    let dispatch = (0..n)
        .map(|i| (0..g_count).map(|g| over_t(&|t| ix.gen(t, i, g))).collect())
        .collect();
    let splits = (0..n)
        .map(|i| Split::ALL.iter().map(|&s| over_t(&|t| ix.split(t, i, s))).collect())
        .collect();
    let solution = ExpansionSolution {
        bus_ids: problem.bus_ids.clone(),
        tech_names: problem.tech_names.clone(),
        line_ids: problem.line_ids.clone(),
        step_hours: problem.step_hours,
        weeks: problem.weeks.clone(),
        efficiency: problem.efficiency,
        dispatch,
        new_capacity: (0..n).map(|i| (0..g_count).map(|g| x[ix.cnew(i, g)]).collect()).collect(),
        storage_energy: (0..n).map(|i| x[ix.socmax(i)]).collect(),
        storage_power: (0..n).map(|i| x[ix.pmax(i)]).collect(),
        soc: (0..n).map(|i| over_t(&|t| ix.soc(t, i))).collect(),
        soc_initial: (0..n).map(|i| (0..ix.weeks).map(|w| x[ix.soc0(i, w)]).collect()).collect(),
        flow_pos: (0..l_count).map(|l| over_t(&|t| ix.flow_pos(t, l))).collect(),
        flow_neg: (0..l_count).map(|l| over_t(&|t| ix.flow_neg(t, l))).collect(),
        angles: (0..n).map(|i| over_t(&|t| ix.angle(t, i))).collect(),
        net_injection: (0..n).map(|i| over_t(&|t| ix.net(t, i))).collect(),
        splits,
        costs: CostBreakdown::default(),
        objective: lp.objective_value,
    };
    let costs = recompute_costs(problem, &solution);
    let total = costs.total();
    if (total - lp.objective_value).abs() > OBJECTIVE_REL_TOL * (1.0 + lp.objective_value.abs()) {
        return Err(ExpansionError::ObjectiveMismatch { decoded: total, solver: lp.objective_value });
    }
    Ok(ExpansionSolution { costs, ..solution })
}

/// Cost terms evaluated from typed values.
pub(super) fn recompute_costs(problem: &ExpansionProblem, s: &ExpansionSolution) -> CostBreakdown {
    let c = &problem.costs;
    let mut out = CostBreakdown { fixed_injection: c.fixed_injection, ..CostBreakdown::default() };
    for i in 0..s.bus_ids.len() {
        for g in 0..s.tech_names.len() {
            let energy: f64 = s.dispatch[i][g].iter().sum::<f64>() * s.step_hours;
            out.variable_dispatch += c.dispatch[g] * energy;
            out.generation_capital += c.capital[g] * s.new_capacity[i][g];
        }
        out.storage_energy_capital += c.storage_energy * s.storage_energy[i];
        out.storage_power_capital += c.storage_power * s.storage_power[i];
    }
    out
}
