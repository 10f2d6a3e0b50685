use slaglab::config::Config;
use slaglab::sweep::Lab;

fn main() -> slaglab::Result<()> {
    let lab = Lab::new(&Config::default(), None)?;
    for alpha in [0.2, 0.1, 0.05, 0.025] {
        let surf = lab.surface(alpha)?;
        let c = &surf.cfg;
        println!(
            "alpha {alpha:<6} delta {:.4e}  epsilon {:.4e}  neck core |lambda| <= {:.3}",
            c.delta, c.epsilon, surf.lambda_core
        );
    }
    let surf = lab.surface(0.1)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&lab.describe(&surf, None))?
    );
    Ok(())
}
