//! Small named networks used throughout the tests, the CLI examples and the
//! acceptance suite.

use crate::graph::WeightedGraph;

/// Single resistor `u — v`.
pub fn k2(length: f64) -> WeightedGraph {
    WeightedGraph::builder()
        .vertices(["u", "v"])
        .edge("e1", "u", "v", length)
        .build()
        .expect("valid fixture")
}

/// Two resistors in parallel between `u` and `v`.
pub fn parallel_pair(first: f64, second: f64) -> WeightedGraph {
    WeightedGraph::builder()
        .vertices(["u", "v"])
        .edge("e1", "u", "v", first)
        .edge("e2", "u", "v", second)
        .build()
        .expect("valid fixture")
}

/// Cycle `a → b → c → a`.
pub fn triangle(ab: f64, bc: f64, ca: f64) -> WeightedGraph {
    WeightedGraph::builder()
        .vertices(["a", "b", "c"])
        .edge("e1", "a", "b", ab)
        .edge("e2", "b", "c", bc)
        .edge("e3", "c", "a", ca)
        .build()
        .expect("valid fixture")
}

/// Path `p0 — p1 — … — pk` with the given lengths.
pub fn path(lengths: &[f64]) -> WeightedGraph {
    let names: Vec<String> = (0..=lengths.len()).map(|i| format!("p{i}")).collect();
    let mut builder = WeightedGraph::builder().vertices(names.iter().map(String::as_str));
    for (i, &len) in lengths.iter().enumerate() {
        builder = builder.edge(&format!("e{}", i + 1), &names[i], &names[i + 1], len);
    }
    builder.build().expect("valid fixture")
}

/// Star with leaves `x`, `y`, `z` at distances `a`, `b`, `c` from the centre `o`.
pub fn tripod(a: f64, b: f64, c: f64) -> WeightedGraph {
    WeightedGraph::builder()
        .vertices(["x", "y", "z", "o"])
        .edge("a", "o", "x", a)
        .edge("b", "o", "y", b)
        .edge("c", "o", "z", c)
        .build()
        .expect("valid fixture")
}

/// Square `D, A, B, C` with sides of length 2 and the diagonal `D → B` of
/// length 1. Every edge at `D` points away from it.
pub fn square_with_diagonal() -> WeightedGraph {
    WeightedGraph::builder()
        .vertices(["A", "B", "C", "D"])
        .edge("e1", "D", "A", 2.0)
        .edge("e2", "A", "B", 2.0)
        .edge("e3", "B", "C", 2.0)
        .edge("e4", "D", "C", 2.0)
        .edge("e5", "D", "B", 1.0)
        .build()
        .expect("valid fixture")
}
