//! Browser bindings: fixed-point success curves, per-iterate traces and a
//! single-threaded solver, all returning JSON strings.

use fpsat::fpsearch::{self, SearchSchedule};
use fpsat::{Formula, ResourceModel, SolveConfig, Status};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Points sampled per curve.
const CURVE_POINTS: usize = 400;

fn schedule(epsilon: f64, lambda_min_denominator: u32) -> Result<SearchSchedule, String> {
    if lambda_min_denominator == 0 {
        return Err("lambda_min denominator must be positive".into());
    }
    SearchSchedule::new(epsilon, 1.0 / lambda_min_denominator as f64).map_err(|e| e.to_string())
}

/// Success probability against marked fraction for the schedule of
/// `(epsilon, 1/denominator)`, plus plain Grover with the same query budget.
pub fn success_curve_json(epsilon: f64, lambda_min_denominator: u32) -> Result<String, String> {
    let s = schedule(epsilon, lambda_min_denominator)?;
    let lambda_min = s.lambda_min();
    let iterations = s.iterations();
    let points: Vec<Value> = (0..=CURVE_POINTS)
        .map(|i| {
            // log-spaced from lambda_min/10 to 1
            let t = i as f64 / CURVE_POINTS as f64;
            let lambda = (lambda_min / 10.0).powf(1.0 - t);
            let theta = lambda.sqrt().asin();
            let grover = ((2 * iterations + 1) as f64 * theta).sin().powi(2);
            json!([lambda, fpsearch::success_probability_exact(lambda, &s), grover])
        })
        .collect();
    Ok(json!({
        "epsilon": epsilon,
        "lambda_min": lambda_min,
        "L": s.queries(),
        "queries": s.oracle_calls(),
        "floor": 1.0 - epsilon * epsilon,
        "points": points,
    })
    .to_string())
}

/// Marked-set probability after each iterate at one marked fraction.
pub fn amplitude_trace_json(lambda: f64, epsilon: f64, lambda_min_denominator: u32) -> Result<String, String> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(format!("lambda must lie in [0,1], got {lambda}"));
    }
    let s = schedule(epsilon, lambda_min_denominator)?;
    let angles: Vec<Value> = s.angles().iter().map(|&(a, b)| json!([a, b])).collect();
    Ok(json!({
        "lambda": lambda,
        "L": s.queries(),
        "trace": fpsearch::success_trace(lambda, &s),
        "angles": angles,
    })
    .to_string())
}

/// Solves DIMACS text on one worker. `r_max < 0` uses the default
/// resource model.
pub fn solve_dimacs_json(text: &str, k: usize, epsilon: f64, r_max: i32, seed: u64) -> Result<String, String> {
    let f = Formula::parse_dimacs(text).map_err(|e| e.to_string())?;
    let rm = ResourceModel::solve(1.0, 1.0, 0.3).map_err(|e| e.to_string())?;
    let cfg = SolveConfig {
        k,
        epsilon,
        workers: Some(1),
        seed,
        r_max: usize::try_from(r_max).ok(),
        ..SolveConfig::default()
    };
    let out = fpsat::solve(&f, &cfg, &rm).map_err(|e| e.to_string())?;
    Ok(json!({
        "status": match out.status {
            Status::Sat => "SATISFIABLE",
            Status::False => "UNSATISFIABLE",
        },
        "model": out.model.map(|m| m.to_dimacs_lits()),
        "stats": out.stats,
        "records": out.records,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn success_curve(epsilon: f64, lambda_min_denominator: u32) -> Result<String, JsError> {
    success_curve_json(epsilon, lambda_min_denominator).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn amplitude_trace(lambda: f64, epsilon: f64, lambda_min_denominator: u32) -> Result<String, JsError> {
    amplitude_trace_json(lambda, epsilon, lambda_min_denominator).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve_dimacs(text: &str, k: usize, epsilon: f64, r_max: i32, seed: u64) -> Result<String, JsError> {
    solve_dimacs_json(text, k, epsilon, r_max, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "p cnf 4 3\n1 2 4 0\n2 3 4 0\n-1 2 -4 0\n";

    #[test]
    fn curve_stays_above_the_floor() {
        let v: Value = serde_json::from_str(&success_curve_json(0.1, 27).unwrap()).unwrap();
        let floor = v["floor"].as_f64().unwrap();
        let lambda_min = v["lambda_min"].as_f64().unwrap();
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), CURVE_POINTS + 1);
        for p in points {
            let (lambda, fp) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
            if lambda >= lambda_min {
                assert!(fp >= floor - 1e-12, "{lambda}: {fp}");
            }
        }
        assert!(success_curve_json(0.1, 0).is_err());
    }

    #[test]
    fn trace_has_one_entry_per_iterate() {
        let v: Value = serde_json::from_str(&amplitude_trace_json(0.2, 0.1, 9).unwrap()).unwrap();
        let l = v["L"].as_u64().unwrap() as usize;
        assert_eq!(v["trace"].as_array().unwrap().len(), (l - 1) / 2 + 1);
        assert!((v["trace"][0].as_f64().unwrap() - 0.2).abs() < 1e-12);
        assert!(amplitude_trace_json(1.5, 0.1, 9).is_err());
    }

    #[test]
    fn solves_dimacs_text() {
        let v: Value = serde_json::from_str(&solve_dimacs_json(EXAMPLE, 1, 0.1, 1, 3).unwrap()).unwrap();
        assert_eq!(v["status"], "SATISFIABLE");
        assert_eq!(v["model"].as_array().unwrap().len(), 4);
        let unsat = solve_dimacs_json("p cnf 2 2\n1 0\n-1 0\n", 0, 0.1, -1, 0).unwrap();
        assert!(unsat.contains("UNSATISFIABLE"));
        assert!(solve_dimacs_json("p cnf 1 1\n2 0\n", 0, 0.1, -1, 0).is_err());
    }
}
