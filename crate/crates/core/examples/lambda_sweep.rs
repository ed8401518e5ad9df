//! Solution size as λ shrinks: the norm decays like λ^{1/(N−q)}.

use nlap_galerkin::cli::{sweep_rows, Context};
use nlap_galerkin::config::RunConfig;

const CONFIG: &str = r#"
[problem]
n = 2
p = 4.0
q = 1.5
alpha = 1.0
a1 = 1.0
[weight]
kind = "exponential"
rate = 1.0
[mesh]
radius = 6.0
elements = 600
[constants]
samples = 50
"#;

fn main() -> nlap_galerkin::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let ctx = Context::new(&cfg)?;
    let lambdas: Vec<f64> = [0.5, 0.1, 0.02, 0.004].iter().map(|f| f * ctx.constants.lambda_star).collect();
    println!("{:>12} {:>12} {:>12} {:>10}", "lambda", "w1n", "sup", "norm_ok");
    let rows = sweep_rows(&ctx, &lambdas);
    for r in &rows {
        println!("{:>12.4e} {:>12.4e} {:>12.4e} {:>10}", r.lambda, r.w1n, r.sup, r.norm_ok);
    }
    let (a, b) = (&rows[0], &rows[rows.len() - 1]);
    let slope = (a.w1n / b.w1n).ln() / (a.lambda / b.lambda).ln();
    println!("log-log slope {slope:.3} (expected {:.3})", 1.0 / (2.0 - 1.5));
    Ok(())
}
