//! Shipped models and named functions.

use std::sync::Arc;

use revcalc_core::smooth::{C2Function, Cube, Exponential, Linear, Product, SinCos, Square};
use revcalc_core::{fixtures, ChainModel, CircleFunction, FunctionOnE};
use serde::Serialize;

/// Name of the Brownian motion on the circle, the only non-chain model.
pub const CIRCLE_BM: &str = "circle-bm";

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Catalog {
    pub models: Vec<Entry>,
    pub chain_functions: Vec<Entry>,
    pub circle_functions: Vec<Entry>,
    pub outer_functions: Vec<Entry>,
}

fn entry(name: &str, description: &str) -> Entry {
    Entry {
        name: name.into(),
        description: description.into(),
    }
}

pub fn catalog() -> Catalog {
    Catalog {
        models: vec![
            entry("t2", "two states, unit masses and rates, no killing"),
            entry("k3", "three states, masses (2,1,1), killing 0.5 at state 2"),
            entry(
                "ring10",
                "10-state cycle, varied masses and conductances, killing 0.2 at state 1",
            ),
            entry(
                CIRCLE_BM,
                "Brownian motion on the unit circle, sampled on a time grid",
            ),
        ],
        chain_functions: vec![
            entry("ones", "constant 1"),
            entry("index", "x -> position of x (0-based)"),
            entry("indicator:<label>", "1 at the labelled state, 0 elsewhere"),
            entry("[v1, v2, ...]", "inline values in state order"),
            entry("{label: value, ...}", "inline table, unlisted states are 0"),
        ],
        circle_functions: vec![entry("sin<k>", "sin(2πkx)"), entry("cos<k>", "cos(2πkx)")],
        outer_functions: vec![
            entry("linear", "x -> x"),
            entry("linear2", "(x, y) -> x + y"),
            entry("square", "x -> x²"),
            entry("cube", "x -> x³"),
            entry("exp", "x -> exp(x)"),
            entry("product", "(x, y) -> xy"),
            entry("sincos", "(x, y) -> sin(x)cos(y)"),
        ],
    }
}

pub fn render_text(c: &Catalog) -> String {
    let mut out = String::new();
    let mut section = |title: &str, entries: &[Entry]| {
        out.push_str(title);
        out.push('\n');
        let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for e in entries {
            out.push_str(&format!("  {:width$}  {}\n", e.name, e.description));
        }
    };
    section("models:", &c.models);
    section("chain functions:", &c.chain_functions);
    section("circle functions:", &c.circle_functions);
    section("outer functions (Φ):", &c.outer_functions);
    out
}

pub fn chain_model(name: &str) -> Option<ChainModel<f64>> {
    match name {
        "t2" => Some(fixtures::symmetric_pair()),
        "k3" => Some(fixtures::killed_triangle()),
        "ring10" => Some(fixtures::ring(10)),
        _ => None,
    }
}

pub fn is_model_name(name: &str) -> bool {
    name == CIRCLE_BM || chain_model(name).is_some()
}

pub fn outer_function(name: &str) -> Option<Arc<dyn C2Function<f64>>> {
    Some(match name {
        "linear" => Arc::new(Linear { coeffs: vec![1.0] }),
        "linear2" => Arc::new(Linear {
            coeffs: vec![1.0, 1.0],
        }),
        "square" => Arc::new(Square),
        "cube" => Arc::new(Cube),
        "exp" => Arc::new(Exponential),
        "product" => Arc::new(Product),
        "sincos" => Arc::new(SinCos),
        _ => return None,
    })
}

pub fn circle_function(name: &str) -> Option<CircleFunction<f64>> {
    let (ctor, k): (fn(u32) -> CircleFunction<f64>, &str) = match name.strip_prefix("sin") {
        Some(k) => (CircleFunction::sine, k),
        None => (CircleFunction::cosine, name.strip_prefix("cos")?),
    };
    k.parse().ok().filter(|&k| k > 0).map(ctor)
}

/// Resolves a named chain function; `None` for unknown names or labels.
pub fn chain_function(model: &ChainModel<f64>, name: &str) -> Option<FunctionOnE<f64>> {
    let n = model.n_states();
    match name {
        "ones" => Some(FunctionOnE::constant(n, 1.0)),
        "index" => Some(FunctionOnE::new((0..n).map(|x| x as f64).collect())),
        _ => {
            let label = name.strip_prefix("indicator:")?;
            model
                .index_of(label)
                .ok()
                .map(|k| FunctionOnE::indicator(n, k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert!(chain_model("t2").is_some() && chain_model("nope").is_none());
        assert!(circle_function("sin3").is_some());
        assert!(circle_function("sin0").is_none() && circle_function("tan1").is_none());
        let t2 = chain_model("t2").unwrap();
        assert_eq!(
            chain_function(&t2, "indicator:2").unwrap().values(),
            &[0.0, 1.0]
        );
        assert!(chain_function(&t2, "indicator:9").is_none());
        for e in catalog().outer_functions {
            assert!(outer_function(&e.name).is_some(), "{}", e.name);
        }
    }

    #[test]
    fn text_lists_core_models() {
        let text = render_text(&catalog());
        assert!(text.contains("t2") && text.contains("k3") && text.contains(CIRCLE_BM));
    }
}
