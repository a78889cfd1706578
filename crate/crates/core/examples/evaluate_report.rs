//! Two-sample tests, effect size, the quality proxy, and report rendering.
//!
//!     cargo run --example evaluate_report -- markdown

use peermirror::evaluate::{
    aggregate, cohens_d, quality_proxy, render_report, t_test_two_sample, EvalRecord, ExperimentOptions, Measurement,
    ReportFormat,
};

fn main() -> anyhow::Result<()> {
    let format: ReportFormat = std::env::args().nth(1).as_deref().unwrap_or("markdown").parse()?;

    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let t = t_test_two_sample(&a, &b)?;
    eprintln!("t = {:.3}, df = {}, p = {:.4}, d = {:.4}", t.t, t.df, t.p, cohens_d(&a, &b)?);
    eprintln!("quality of 5 errors in 100 words: {}", quality_proxy(5, 100, 5.0)?);

    // (user, proposed, comparison) measurements for five essays.
    let rows = [
        ("s1", (7, 58.0), (6, 63.0), (0, 100.0)),
        ("s2", (4, 76.0), (4, 74.0), (1, 95.0)),
        ("s3", (9, 49.0), (8, 55.0), (0, 100.0)),
        ("s4", (5, 70.0), (7, 62.0), (1, 94.0)),
        ("s5", (6, 64.0), (5, 69.0), (0, 100.0)),
    ];
    let m = |(errors, quality): (u32, f64)| Measurement { errors, quality };
    let records = rows
        .iter()
        .map(|&(id, u, p, c)| EvalRecord::new(id, m(u), m(p), m(c)))
        .collect();
    let report = aggregate(records, vec![], ExperimentOptions { secondary: true });
    print!("{}", render_report(&report, format)?);
    Ok(())
}
