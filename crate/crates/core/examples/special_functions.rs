//! Lambert W on both real branches and the critical-regime mapping G(y).
//!
//! ```text
//! cargo run --example special_functions
//! ```

use covert_qcd::special::{
    erfcx, g_mapping, lambert_w, lambert_w_minus1_small_asymptote, LambertBranch,
};

fn main() -> covert_qcd::Result<()> {
    println!(
        "{:>12} {:>22} {:>22} {:>22}",
        "z", "W0(z)", "W-1(z)", "W-1 asymptote"
    );
    for z in [-0.367_879, -0.3, -0.1, -1e-3, -1e-8] {
        println!(
            "{z:>12.3e} {:>22.15} {:>22.15} {:>22.15}",
            lambert_w(LambertBranch::Principal, z)?,
            lambert_w(LambertBranch::NegativeBranch, z)?,
            lambert_w_minus1_small_asymptote(z)?,
        );
    }
    for z in [1.0, 10.0, 1e6] {
        println!(
            "{z:>12.3e} {:>22.15}",
            lambert_w(LambertBranch::Principal, z)?
        );
    }

    println!();
    println!(
        "{:>12} {:>22} {:>12} {:>12}",
        "y", "G(y)", "G(y)/y", "G(y)/ln y"
    );
    for y in [1e-6, 1e-2, 0.5, 1.0, 10.0, 1e4, 1e8] {
        let g = g_mapping(y)?;
        let vs_log = if y > 1.0 {
            format!("{:.6}", g / y.ln())
        } else {
            "-".into()
        };
        println!("{y:>12.3e} {g:>22.15e} {:>12.6} {vs_log:>12}", g / y);
    }

    println!();
    println!("erfcx(30) = {:.15e}", erfcx(30.0));
    Ok(())
}
